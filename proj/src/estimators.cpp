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

#include "dce/estimators.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "dce/linalg.hpp"

namespace dce {

ChannelEstimate ls_estimate(const ComplexMatrix& pilot_observation, double power, std::size_t pilot_length) {
  if (power <= 0.0 || pilot_length == 0) throw std::invalid_argument("ls_estimate: need rho > 0 and N_p >= 1");
  const double scale = 1.0 / (std::sqrt(power) * static_cast<double>(pilot_length));
  return {pilot_observation * scale, "ls", 0.0};
}

CovarianceModel genie_covariance(const ChannelModelSpec& spec) {
  const auto factors = full_covariance(spec);
  return {factors.spatial, factors.freq, CovarianceSource::Genie, 0, 0.0};
}

ChannelEstimate mmse_estimate(const ComplexMatrix& pilot_observation, double power, std::size_t pilot_length,
                              const CovarianceModel& cov, double noise_variance) {
  const auto m = pilot_observation.rows();
  const auto nf = pilot_observation.cols();
  if (cov.spatial.rows() != m || cov.freq.rows() != nf)
    throw DimensionMismatch("mmse_estimate: covariance factors do not match the observation");
  if (power <= 0.0 || pilot_length == 0 || noise_variance < 0.0)
    throw std::invalid_argument("mmse_estimate: need rho > 0, N_p >= 1, sigma^2 >= 0");

  const auto sp = hermitian_eig(cov.spatial);
  const auto fr = hermitian_eig(cov.freq);
  const double np = static_cast<double>(pilot_length);
  const double gain = std::sqrt(power) * np;
  const double signal = gain * gain + cov.copilot_power;
  const double noise = np * noise_variance;

  // Coefficients in the joint eigenbasis: U_s^H Y conj(U_f).
  ComplexMatrix coeff = sp.vectors.adjoint() * pilot_observation * fr.vectors.conjugate();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < nf; ++j) {
      const double lambda = std::max(sp.values(i), 0.0) * std::max(fr.values(j), 0.0);
      const double denom = signal * lambda + noise;
      coeff(i, j) *= denom > 0.0 ? gain * lambda / denom : 0.0;
    }
  }
  ChannelEstimate est{sp.vectors * coeff * fr.vectors.transpose(), "", 0.0};
  est.estimator = cov.source == CovarianceSource::Genie ? "mmse_genie" : "mmse_sample";
  return est;
}

CovarianceModel sample_covariance(std::span<const ComplexMatrix> ls_estimates, double noise_variance, double power,
                                  std::size_t pilot_length) {
  if (ls_estimates.empty()) throw std::invalid_argument("sample_covariance: no training estimates");
  const auto m = ls_estimates.front().rows();
  const auto nf = ls_estimates.front().cols();
  ComplexMatrix spatial = ComplexMatrix::Zero(m, m);
  ComplexMatrix freq = ComplexMatrix::Zero(nf, nf);
  for (const auto& h : ls_estimates) {
    if (h.rows() != m || h.cols() != nf) throw DimensionMismatch("sample_covariance: estimates differ in shape");
    spatial.noalias() += h * h.adjoint();
    freq.noalias() += h.transpose() * h.conjugate();
  }
  const auto t = static_cast<double>(ls_estimates.size());
  spatial /= t * static_cast<double>(nf);
  freq /= t * static_cast<double>(m);
  const double floor = noise_variance / (power * static_cast<double>(pilot_length));
  spatial.diagonal().array() -= floor;
  freq.diagonal().array() -= floor;
  spatial = clip_to_psd(spatial);
  freq = clip_to_psd(freq);
  const double mean_diag = spatial.diagonal().real().mean();
  if (mean_diag > 0.0)
    spatial /= mean_diag;
  else
    spatial = ComplexMatrix::Identity(m, m);
  return {spatial, freq, CovarianceSource::Sample, ls_estimates.size(), 0.0};
}

const std::vector<DcePreset>& dce_presets() {
  static const std::vector<DcePreset> presets = {
      {"m1_k8", 1, 8, 2000, 496},        {"m1_k16", 1, 16, 1300, 1760},    {"m1_k32", 1, 32, 900, 6592},
      {"m1_k64", 1, 64, 250, 25472},     {"m64_k8", 64, 8, 4000, 1504},    {"m64_k16", 64, 16, 1970, 3776},
      {"m64_k32", 64, 32, 1800, 10624},  {"m64_k64", 64, 64, 1000, 33536},
  };
  return presets;
}

const DcePreset& dce_preset(const std::string& name) {
  for (const auto& p : dce_presets())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown decoder preset '" + name + "'");
}

DceResult dce_estimate(const ReceivedGrid& rx, const PilotAllocation& allocation, std::size_t user,
                       const DceOptions& options, RngStream& rng) {
  if (user >= allocation.user_count()) throw std::invalid_argument("dce_estimate: user out of range");
  const ComplexGrid& y = rx.y;
  const SymbolPlan& plan = rx.plan;
  if (plan.subcarriers != y.subcarriers() || plan.symbols != y.symbols())
    throw DimensionMismatch("dce_estimate: symbol plan does not match the grid");

  auto rotation = [&](std::size_t q, std::size_t n) -> cdouble {
    const cdouble s = plan.at(user, q, n);
    return (plan.is_known(user, q, n) && s != cdouble{}) ? s : cdouble{1.0, 0.0};
  };

  ComplexGrid derotated = y;
  for (std::size_t m = 0; m < y.antennas(); ++m)
    for (std::size_t q = 0; q < y.subcarriers(); ++q)
      for (std::size_t n = 0; n < y.symbols(); ++n) derotated(m, q, n) *= std::conj(rotation(q, n));

  DecoderArch arch;
  arch.layers = options.layers;
  arch.width = options.width;
  arch.out_channels = 2 * y.antennas();
  arch.out_freq = y.subcarriers();
  arch.out_time = y.symbols();
  FitOptions fit_options;
  fit_options.epochs = options.epochs;
  fit_options.adam.lr = options.lr;

  const auto start = std::chrono::steady_clock::now();
  DceResult result;
  result.fit = fit(arch, pack_grid(derotated), fit_options, rng);
  const auto stop = std::chrono::steady_clock::now();

  result.denoised = unpack_grid(result.fit.output);
  for (std::size_t m = 0; m < y.antennas(); ++m)
    for (std::size_t q = 0; q < y.subcarriers(); ++q)
      for (std::size_t n = 0; n < y.symbols(); ++n) result.denoised(m, q, n) *= rotation(q, n);

  const ComplexMatrix yk = extract_user_signal(result.denoised, allocation, user);
  result.estimate = ls_estimate(yk, allocation.power[user], allocation.pilot_length);
  result.estimate.estimator = "dce";
  result.estimate.fit_seconds = std::chrono::duration<double>(stop - start).count();
  return result;
}

double analytic_mmse_error(std::span<const double> eigenvalues, double snr) {
  if (snr <= 0.0) throw std::invalid_argument("analytic_mmse_error: snr must be positive");
  double err = 0.0;
  for (double lambda : eigenvalues) {
    if (lambda < 0.0) throw std::invalid_argument("analytic_mmse_error: negative eigenvalue");
    err += lambda - lambda * lambda / (lambda + 1.0 / snr);
  }
  return err;
}

double analytic_ls_error(std::size_t rank, double snr) {
  if (snr <= 0.0) throw std::invalid_argument("analytic_ls_error: snr must be positive");
  return static_cast<double>(rank) / snr;
}

}  // namespace dce
