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

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dce/errors.hpp"

namespace dce {

using cdouble = std::complex<double>;

using RealMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

using RealMatrixMap = Eigen::Map<RealMatrix>;
using ConstRealMatrixMap = Eigen::Map<const RealMatrix>;

/// Real C x F x T array, row-major (channel slowest, time fastest).
class RealTensor3 {
 public:
  RealTensor3() = default;
  RealTensor3(std::size_t channels, std::size_t freq, std::size_t time, double fill = 0.0)
      : channels_(channels), freq_(freq), time_(time), data_(channels * freq * time, fill) {}

  std::size_t channels() const noexcept { return channels_; }
  std::size_t freq() const noexcept { return freq_; }
  std::size_t time() const noexcept { return time_; }
  /// Number of grid positions per channel (F * T).
  std::size_t plane() const noexcept { return freq_ * time_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t c, std::size_t f, std::size_t t) {
    return data_[(c * freq_ + f) * time_ + t];
  }
  double operator()(std::size_t c, std::size_t f, std::size_t t) const {
    return data_[(c * freq_ + f) * time_ + t];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// The tensor viewed as a C x (F*T) matrix.
  RealMatrixMap matrix() { return {data_.data(), static_cast<Eigen::Index>(channels_), static_cast<Eigen::Index>(plane())}; }
  ConstRealMatrixMap matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(channels_), static_cast<Eigen::Index>(plane())};
  }

  bool same_shape(const RealTensor3& other) const noexcept {
    return channels_ == other.channels_ && freq_ == other.freq_ && time_ == other.time_;
  }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

  bool operator==(const RealTensor3&) const = default;

 private:
  std::size_t channels_ = 0;
  std::size_t freq_ = 0;
  std::size_t time_ = 0;
  std::vector<double> data_;
};

/// Complex M x N_f x N grid (antenna, subcarrier, OFDM symbol), row-major.
class ComplexGrid {
 public:
  ComplexGrid() = default;
  ComplexGrid(std::size_t antennas, std::size_t subcarriers, std::size_t symbols, cdouble fill = {})
      : antennas_(antennas), subcarriers_(subcarriers), symbols_(symbols),
        data_(antennas * subcarriers * symbols, fill) {}

  std::size_t antennas() const noexcept { return antennas_; }
  std::size_t subcarriers() const noexcept { return subcarriers_; }
  std::size_t symbols() const noexcept { return symbols_; }
  std::size_t size() const noexcept { return data_.size(); }

  cdouble& operator()(std::size_t m, std::size_t q, std::size_t n) {
    return data_[(m * subcarriers_ + q) * symbols_ + n];
  }
  cdouble operator()(std::size_t m, std::size_t q, std::size_t n) const {
    return data_[(m * subcarriers_ + q) * symbols_ + n];
  }

  std::span<cdouble> data() noexcept { return data_; }
  std::span<const cdouble> data() const noexcept { return data_; }

  bool same_shape(const ComplexGrid& other) const noexcept {
    return antennas_ == other.antennas_ && subcarriers_ == other.subcarriers_ && symbols_ == other.symbols_;
  }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return s;
  }

  /// M x N_f slice at OFDM symbol n.
  ComplexMatrix symbol_slice(std::size_t n) const {
    ComplexMatrix out(antennas_, subcarriers_);
    for (std::size_t m = 0; m < antennas_; ++m)
      for (std::size_t q = 0; q < subcarriers_; ++q) out(m, q) = (*this)(m, q, n);
    return out;
  }

  /// Grid holding `slice` (M x N_f) at every OFDM symbol.
  static ComplexGrid extend_in_time(const ComplexMatrix& slice, std::size_t symbols) {
    ComplexGrid g(static_cast<std::size_t>(slice.rows()), static_cast<std::size_t>(slice.cols()), symbols);
    for (std::size_t m = 0; m < g.antennas(); ++m)
      for (std::size_t q = 0; q < g.subcarriers(); ++q)
        for (std::size_t n = 0; n < symbols; ++n) g(m, q, n) = slice(m, q);
    return g;
  }

  bool operator==(const ComplexGrid&) const = default;

 private:
  std::size_t antennas_ = 0;
  std::size_t subcarriers_ = 0;
  std::size_t symbols_ = 0;
  std::vector<cdouble> data_;
};

}  // namespace dce
