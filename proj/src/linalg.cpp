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

#include "dce/linalg.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace dce {

bool is_hermitian(const ComplexMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

ComplexMatrix hermitian_solve(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw DimensionMismatch("hermitian_solve: A must be square with rows(A) == rows(B)");
  if (!is_hermitian(a)) throw NotPositiveDefinite("hermitian_solve: matrix is not Hermitian");
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("hermitian_solve: Cholesky pivot <= 0");
  // Rounding can leave a tiny positive pivot on an exactly singular matrix.
  const double scale = a.diagonal().real().cwiseAbs().maxCoeff();
  const ComplexMatrix l = llt.matrixL();
  if (std::norm(l.diagonal().cwiseAbs().minCoeff()) <= 1e-12 * scale)
    throw NotPositiveDefinite("hermitian_solve: matrix is numerically singular");
  return llt.solve(Eigen::MatrixXcd(b));
}

HermitianEigen hermitian_eig(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("hermitian_eig: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a);
  if (solver.info() != Eigen::Success) throw NoConvergence("hermitian_eig: iteration cap reached");
  // Eigen sorts ascending.
  const Eigen::Index n = a.rows();
  HermitianEigen out{RealVector(n), ComplexMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

ComplexMatrix hermitian_sqrt(const ComplexMatrix& a) {
  const auto eig = hermitian_eig(a);
  const RealVector root = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * root.cast<cdouble>().asDiagonal() * eig.vectors.adjoint();
}

ComplexMatrix clip_to_psd(const ComplexMatrix& a) {
  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  const auto eig = hermitian_eig(sym);
  const RealVector clipped = eig.values.cwiseMax(0.0);
  return eig.vectors * clipped.cast<cdouble>().asDiagonal() * eig.vectors.adjoint();
}

}  // namespace dce
