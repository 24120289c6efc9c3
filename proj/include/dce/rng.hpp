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

#include <array>
#include <cstdint>
#include <vector>

#include "dce/tensor.hpp"

namespace dce {

/// Seeded pseudo-random stream keyed by (seed, stream id).
///
/// The generator is xoshiro256** with its state expanded from the key by
/// splitmix64, so equal keys give bit-identical sequences on every platform.
/// Child streams obtained through `derive` are independent of the parent's
/// consumption state, which keeps per-trial draws independent of scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Stream keyed by (seed, hash(stream, id)); does not advance *this.
  RngStream derive(std::uint64_t id) const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> state_{};
};

/// Circularly-symmetric complex Gaussian samples, E|z|^2 = variance.
std::vector<cdouble> draw_complex_gaussian(RngStream& rng, std::size_t n, double variance);

/// Uniform samples on [low, high). Throws std::invalid_argument unless low < high.
std::vector<double> draw_uniform(RngStream& rng, std::size_t n, double low, double high);

/// Unit-modulus QPSK symbols from {+-1 +- j}/sqrt(2).
std::vector<cdouble> draw_qpsk(RngStream& rng, std::size_t n);

}  // namespace dce
