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

#include <cstddef>
#include <string>
#include <vector>

#include "dce/rng.hpp"
#include "dce/tensor.hpp"

namespace dce {

/// Multipath tap delays (seconds) with linear powers normalised to unit sum.
struct PowerDelayProfile {
  std::vector<double> delays;
  std::vector<double> powers;

  /// Builds a profile from powers in dB and normalises it.
  static PowerDelayProfile from_db(std::vector<double> delays, const std::vector<double>& powers_db);
  /// 3GPP Extended Pedestrian A.
  static PowerDelayProfile epa();
  /// Single tap at zero delay (flat fading).
  static PowerDelayProfile flat();

  std::size_t taps() const noexcept { return delays.size(); }
  /// Throws std::invalid_argument if delays are not strictly increasing from >= 0,
  /// a power is not positive, or the powers do not sum to one.
  void validate() const;
};

enum class ChannelKind { Tdl, Kronecker, IidPerRe };

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& name);

struct ChannelModelSpec {
  ChannelKind kind = ChannelKind::Tdl;
  PowerDelayProfile pdp = PowerDelayProfile::epa();
  double rho = 0.0;  // spatial correlation coefficient (Kronecker)
  std::size_t antennas = 1;
  std::size_t subcarriers = 64;
  std::size_t symbols = 64;
  double subcarrier_spacing = 15e3;  // Hz

  void validate() const;
};

/// Frequency response per (antenna, subcarrier, symbol); constant over symbols.
using ChannelRealization = ComplexGrid;

/// Independent tap gains per antenna; H[m,q,n] = sum_p a_p exp(-j 2 pi q df tau_p).
ChannelRealization tdl_channel(const ChannelModelSpec& spec, RngStream& rng);

/// R[i,j] = rho^|i-j|.
ComplexMatrix exp_corr_matrix(double rho, std::size_t antennas);

/// Tap gains correlated across antennas by R_sp^{1/2} before the TDL synthesis.
ChannelRealization kronecker_channel(const ChannelModelSpec& spec, RngStream& rng);

/// Independent CN(0,1) per (antenna, subcarrier), held over the symbols.
ChannelRealization iid_per_re_channel(const ChannelModelSpec& spec, RngStream& rng);

/// Dispatches on spec.kind.
ChannelRealization draw_channel(const ChannelModelSpec& spec, RngStream& rng);

/// R_f[q,q'] = sum_p P_p exp(-j 2 pi (q - q') df tau_p).
ComplexMatrix freq_covariance(const PowerDelayProfile& pdp, std::size_t subcarriers, double subcarrier_spacing);

/// Kronecker factors of cov(vec(H)) = R_f (x) R_sp, vec stacking antenna-major columns.
struct CovarianceFactors {
  ComplexMatrix spatial;  // M x M
  ComplexMatrix freq;     // N_f x N_f
};

/// TDL -> R_sp = I; Kronecker -> exp_corr_matrix; IidPerRe -> both identity.
CovarianceFactors full_covariance(const ChannelModelSpec& spec);

}  // namespace dce
