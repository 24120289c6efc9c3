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
#include <span>
#include <string>
#include <vector>

#include "dce/channels.hpp"
#include "dce/decoder.hpp"
#include "dce/signal_model.hpp"

namespace dce {

/// M x N_f channel estimate; the channel is treated as constant over the grid.
struct ChannelEstimate {
  ComplexMatrix gains;
  std::string estimator;
  double fit_seconds = 0.0;

  /// Quasi-static extension over `symbols` OFDM symbols.
  ComplexGrid as_grid(std::size_t symbols) const { return ComplexGrid::extend_in_time(gains, symbols); }
};

/// H_hat = Y_k / (sqrt(rho) N_p).
ChannelEstimate ls_estimate(const ComplexMatrix& pilot_observation, double power, std::size_t pilot_length);

enum class CovarianceSource { Genie, Sample };

/// cov(vec H) ~= freq (x) spatial. Co-pilot interference with the same
/// structure enters as Gamma = copilot_power * (freq (x) spatial), where
/// copilot_power = sum_i rho_i N_p^2.
struct CovarianceModel {
  ComplexMatrix spatial;
  ComplexMatrix freq;
  CovarianceSource source = CovarianceSource::Genie;
  std::size_t training = 0;
  double copilot_power = 0.0;
};

CovarianceModel genie_covariance(const ChannelModelSpec& spec);

/// Linear MMSE estimate of H from Y_k = sqrt(rho) N_p H + (co-pilot) + Z_k,
/// noise variance N_p sigma^2 per entry. Applied in the joint eigenbasis of
/// the Kronecker factors; the M N_f x M N_f matrix is never formed.
ChannelEstimate mmse_estimate(const ComplexMatrix& pilot_observation, double power, std::size_t pilot_length,
                              const CovarianceModel& cov, double noise_variance);

/// Per-factor sample covariance of LS estimates with the LS noise floor
/// sigma^2 / (rho N_p) removed and eigenvalues clipped at zero. The spatial
/// factor is normalised to unit mean diagonal; the frequency factor carries
/// the channel power.
CovarianceModel sample_covariance(std::span<const ComplexMatrix> ls_estimates, double noise_variance, double power,
                                  std::size_t pilot_length);

struct DceOptions {
  std::size_t layers = 6;
  std::size_t width = 16;
  std::size_t epochs = 1970;
  double lr = 0.01;
};

/// Named (k, epochs) presets from the hyperparameter tables.
struct DcePreset {
  std::string name;
  std::size_t antennas;  // table the preset belongs to (1 or 64)
  std::size_t width;
  std::size_t epochs;
  std::size_t weights;  // tabulated total weight count
};

const std::vector<DcePreset>& dce_presets();
/// Looks up "m1_k8", "m64_k16", ...; throws std::invalid_argument if unknown.
const DcePreset& dce_preset(const std::string& name);

struct DceResult {
  ChannelEstimate estimate;
  FitReport fit;
  ComplexGrid denoised;  // decoder output with the user's symbols re-applied
};

/// Deep channel estimate of `user`: the grid is derotated by the user's known
/// symbols, packed, fitted by the decoder, unpacked, re-rotated and passed
/// through the LS correlator. Propagates NonFiniteLoss.
DceResult dce_estimate(const ReceivedGrid& rx, const PilotAllocation& allocation, std::size_t user,
                       const DceOptions& options, RngStream& rng);

/// sum_i lambda_i - lambda_i^2 / (lambda_i + 1/snr)
double analytic_mmse_error(std::span<const double> eigenvalues, double snr);

/// rank / snr
double analytic_ls_error(std::size_t rank, double snr);

}  // namespace dce
