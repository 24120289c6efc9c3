// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "dce/tensor.hpp"

namespace dce {

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
struct HermitianEigen {
  RealVector values;
  ComplexMatrix vectors;  // columns are orthonormal eigenvectors
};

/// max|A - A^H| <= tol * max|A|.
bool is_hermitian(const ComplexMatrix& a, double rel_tol = 1e-10);

/// Solves A X = B for Hermitian positive definite A via Cholesky.
/// Throws NotPositiveDefinite when a pivot is not positive or below 1e-12 of
/// the largest diagonal entry.
ComplexMatrix hermitian_solve(const ComplexMatrix& a, const ComplexMatrix& b);

/// Throws NoConvergence if the iterative solver does not converge.
HermitianEigen hermitian_eig(const ComplexMatrix& a);

/// Principal square root U sqrt(max(L, 0)) U^H of a Hermitian PSD matrix.
ComplexMatrix hermitian_sqrt(const ComplexMatrix& a);

/// Hermitian part with eigenvalues clipped at zero.
ComplexMatrix clip_to_psd(const ComplexMatrix& a);

}  // namespace dce
