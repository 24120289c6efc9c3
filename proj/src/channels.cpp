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

#include "dce/channels.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "dce/linalg.hpp"

namespace dce {
namespace {

// phasor(q, p) = exp(-j 2 pi q df tau_p)
ComplexMatrix tap_phasors(const PowerDelayProfile& pdp, std::size_t subcarriers, double spacing) {
  ComplexMatrix out(subcarriers, pdp.taps());
  for (std::size_t q = 0; q < subcarriers; ++q)
    for (std::size_t p = 0; p < pdp.taps(); ++p)
      out(q, p) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(q) * spacing * pdp.delays[p]);
  return out;
}

// gains: M x P tap gains -> H held constant over the symbols.
ChannelRealization synthesize(const ChannelModelSpec& spec, const ComplexMatrix& gains) {
  const ComplexMatrix phasors = tap_phasors(spec.pdp, spec.subcarriers, spec.subcarrier_spacing);
  const ComplexMatrix response = gains * phasors.transpose();  // M x N_f
  return ComplexGrid::extend_in_time(response, spec.symbols);
}

ComplexMatrix draw_tap_gains(const ChannelModelSpec& spec, RngStream& rng) {
  ComplexMatrix gains(spec.antennas, spec.pdp.taps());
  for (std::size_t m = 0; m < spec.antennas; ++m) {
    const auto g = draw_complex_gaussian(rng, spec.pdp.taps(), 1.0);
    for (std::size_t p = 0; p < spec.pdp.taps(); ++p) gains(m, p) = std::sqrt(spec.pdp.powers[p]) * g[p];
  }
  return gains;
}

}  // namespace

PowerDelayProfile PowerDelayProfile::from_db(std::vector<double> delays, const std::vector<double>& powers_db) {
  if (delays.size() != powers_db.size()) throw std::invalid_argument("pdp: delays and powers differ in length");
  PowerDelayProfile pdp;
  pdp.delays = std::move(delays);
  pdp.powers.reserve(powers_db.size());
  for (double db : powers_db) pdp.powers.push_back(std::pow(10.0, db / 10.0));
  const double total = std::accumulate(pdp.powers.begin(), pdp.powers.end(), 0.0);
  for (double& p : pdp.powers) p /= total;
  pdp.validate();
  return pdp;
}

PowerDelayProfile PowerDelayProfile::epa() {
  return from_db({0.0, 30e-9, 70e-9, 90e-9, 110e-9, 190e-9, 410e-9}, {0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8});
}

PowerDelayProfile PowerDelayProfile::flat() { return {{0.0}, {1.0}}; }

void PowerDelayProfile::validate() const {
  if (delays.empty() || delays.size() != powers.size()) throw std::invalid_argument("pdp: empty or ragged profile");
  if (delays.front() < 0.0) throw std::invalid_argument("pdp: negative delay");
  for (std::size_t i = 1; i < delays.size(); ++i)
    if (!(delays[i] > delays[i - 1])) throw std::invalid_argument("pdp: delays must be strictly increasing");
  double total = 0.0;
  for (double p : powers) {
    if (!(p > 0.0)) throw std::invalid_argument("pdp: tap powers must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("pdp: powers must sum to one");
}

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Tdl:
      return "tdl";
    case ChannelKind::Kronecker:
      return "kronecker";
    case ChannelKind::IidPerRe:
      return "iid";
  }
  return "unknown";
}

ChannelKind channel_kind_from_string(const std::string& name) {
  if (name == "tdl" || name == "epa") return ChannelKind::Tdl;
  if (name == "kronecker") return ChannelKind::Kronecker;
  if (name == "iid" || name == "iid_per_re") return ChannelKind::IidPerRe;
  throw std::invalid_argument("unknown channel kind '" + name + "'");
}

void ChannelModelSpec::validate() const {
  if (antennas == 0 || subcarriers == 0 || symbols == 0) throw std::invalid_argument("channel: dimensions must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("channel: rho must lie in [0, 1)");
  if (subcarrier_spacing <= 0.0) throw std::invalid_argument("channel: subcarrier spacing must be positive");
  if (kind != ChannelKind::IidPerRe) pdp.validate();
}

ChannelRealization tdl_channel(const ChannelModelSpec& spec, RngStream& rng) {
  spec.validate();
  return synthesize(spec, draw_tap_gains(spec, rng));
}

ComplexMatrix exp_corr_matrix(double rho, std::size_t antennas) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("exp_corr_matrix: rho must lie in [0, 1)");
  ComplexMatrix r(antennas, antennas);
  for (std::size_t i = 0; i < antennas; ++i)
    for (std::size_t j = 0; j < antennas; ++j)
      r(i, j) = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
  return r;
}

ChannelRealization kronecker_channel(const ChannelModelSpec& spec, RngStream& rng) {
  spec.validate();
  const ComplexMatrix root = hermitian_sqrt(exp_corr_matrix(spec.rho, spec.antennas));
  return synthesize(spec, root * draw_tap_gains(spec, rng));
}

ChannelRealization iid_per_re_channel(const ChannelModelSpec& spec, RngStream& rng) {
  spec.validate();
  const auto g = draw_complex_gaussian(rng, spec.antennas * spec.subcarriers, 1.0);
  ComplexMatrix response(spec.antennas, spec.subcarriers);
  std::copy(g.begin(), g.end(), response.data());
  return ComplexGrid::extend_in_time(response, spec.symbols);
}

ChannelRealization draw_channel(const ChannelModelSpec& spec, RngStream& rng) {
  switch (spec.kind) {
    case ChannelKind::Tdl:
      return tdl_channel(spec, rng);
    case ChannelKind::Kronecker:
      return kronecker_channel(spec, rng);
    case ChannelKind::IidPerRe:
      return iid_per_re_channel(spec, rng);
  }
  throw std::logic_error("draw_channel: unhandled kind");
}

ComplexMatrix freq_covariance(const PowerDelayProfile& pdp, std::size_t subcarriers, double subcarrier_spacing) {
  pdp.validate();
  ComplexMatrix r(subcarriers, subcarriers);
  for (std::size_t q = 0; q < subcarriers; ++q) {
    for (std::size_t qq = 0; qq < subcarriers; ++qq) {
      const double lag = (static_cast<double>(q) - static_cast<double>(qq)) * subcarrier_spacing;
      cdouble acc{};
      for (std::size_t p = 0; p < pdp.taps(); ++p)
        acc += pdp.powers[p] * std::polar(1.0, -2.0 * std::numbers::pi * lag * pdp.delays[p]);
      r(q, qq) = acc;
    }
  }
  return r;
}

CovarianceFactors full_covariance(const ChannelModelSpec& spec) {
  spec.validate();
  const auto m = static_cast<Eigen::Index>(spec.antennas);
  const auto nf = static_cast<Eigen::Index>(spec.subcarriers);
  switch (spec.kind) {
    case ChannelKind::Tdl:
      return {ComplexMatrix::Identity(m, m), freq_covariance(spec.pdp, spec.subcarriers, spec.subcarrier_spacing)};
    case ChannelKind::Kronecker:
      return {exp_corr_matrix(spec.rho, spec.antennas),
              freq_covariance(spec.pdp, spec.subcarriers, spec.subcarrier_spacing)};
    case ChannelKind::IidPerRe:
      return {ComplexMatrix::Identity(m, m), ComplexMatrix::Identity(nf, nf)};
  }
  throw std::logic_error("full_covariance: unhandled kind");
}

}  // namespace dce
