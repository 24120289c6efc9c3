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

#include "dce/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dce {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::uint64_t sm = seed;
  std::uint64_t mixed = splitmix64(sm);
  std::uint64_t key = mixed ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
  for (auto& word : state_) word = splitmix64(key);
  // xoshiro must not start from the all-zero state.
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

RngStream RngStream::derive(std::uint64_t id) const {
  std::uint64_t x = stream_ ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t h = splitmix64(x);
  x = h ^ id;
  return RngStream(seed_, splitmix64(x));
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RngStream::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::normal() noexcept {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<cdouble> draw_complex_gaussian(RngStream& rng, std::size_t n, double variance) {
  if (variance < 0.0) throw std::invalid_argument("draw_complex_gaussian: negative variance");
  std::vector<cdouble> out(n);
  if (variance == 0.0) return out;
  for (auto& z : out) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    const double r = std::sqrt(-variance * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    z = {r * std::cos(phase), r * std::sin(phase)};
  }
  return out;
}

std::vector<double> draw_uniform(RngStream& rng, std::size_t n, double low, double high) {
  if (!(low < high)) throw std::invalid_argument("draw_uniform: requires low < high");
  std::vector<double> out(n);
  const double width = high - low;
  for (auto& v : out) {
    v = low + width * rng.uniform();
    // Rounding in low + width*u can land exactly on high.
    if (v >= high) v = std::nextafter(high, low);
  }
  return out;
}

std::vector<cdouble> draw_qpsk(RngStream& rng, std::size_t n) {
  std::vector<cdouble> out(n);
  const double a = std::numbers::sqrt2 / 2.0;
  std::uint64_t bits = 0;
  int left = 0;
  for (auto& s : out) {
    if (left == 0) {
      bits = rng.next_u64();
      left = 32;
    }
    s = {(bits & 1) ? -a : a, (bits & 2) ? -a : a};
    bits >>= 2;
    --left;
  }
  return out;
}

}  // namespace dce
