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

#include "dce/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dce {

std::string to_string(PilotArrangement arrangement) {
  return arrangement == PilotArrangement::BlockSymbol ? "block" : "random";
}

PilotArrangement pilot_arrangement_from_string(const std::string& name) {
  if (name == "block" || name == "block_symbol") return PilotArrangement::BlockSymbol;
  if (name == "random" || name == "random_tones") return PilotArrangement::RandomTones;
  throw std::invalid_argument("unknown pilot arrangement '" + name + "'");
}

PilotAllocation make_pilot_allocation(std::size_t users, std::size_t pilot_length, PilotArrangement arrangement,
                                      std::size_t subcarriers, std::size_t symbols, RngStream& rng, double power) {
  if (users == 0 || pilot_length == 0) throw InsufficientResources("pilot allocation: need K >= 1 and N_p >= 1");
  if (users * pilot_length > symbols)
    throw InsufficientResources("pilot allocation: K*N_p = " + std::to_string(users * pilot_length) +
                                " pilot REs per subcarrier exceed " + std::to_string(symbols) + " symbols");
  PilotAllocation alloc;
  alloc.subcarriers = subcarriers;
  alloc.symbols = symbols;
  alloc.pilot_length = pilot_length;
  alloc.arrangement = arrangement;
  alloc.users.resize(users);
  alloc.power.assign(users, power);

  std::vector<std::size_t> order(symbols);
  for (std::size_t q = 0; q < subcarriers; ++q) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (arrangement == PilotArrangement::RandomTones) {
      // Partial Fisher-Yates: the first K*N_p entries are a uniform draw without replacement.
      for (std::size_t i = 0; i < users * pilot_length; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(symbols - i));
        std::swap(order[i], order[j]);
      }
    }
    for (std::size_t k = 0; k < users; ++k) {
      std::vector<std::size_t> mine(order.begin() + static_cast<std::ptrdiff_t>(k * pilot_length),
                                    order.begin() + static_cast<std::ptrdiff_t>((k + 1) * pilot_length));
      std::ranges::sort(mine);
      for (std::size_t n : mine) alloc.users[k].push_back({q, n, {}});
    }
  }
  for (auto& user : alloc.users) {
    const auto values = draw_qpsk(rng, user.size());
    for (std::size_t i = 0; i < user.size(); ++i) user[i].value = values[i];
  }
  return alloc;
}

std::size_t ReMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string to_string(ContaminationKind kind) {
  switch (kind) {
    case ContaminationKind::None:
      return "none";
    case ContaminationKind::RandomREs:
      return "random";
    case ContaminationKind::ContiguousBlocks:
      return "blocks";
  }
  return "unknown";
}

ContaminationKind contamination_kind_from_string(const std::string& name) {
  if (name == "none") return ContaminationKind::None;
  if (name == "random" || name == "random_res") return ContaminationKind::RandomREs;
  if (name == "blocks" || name == "contiguous_blocks") return ContaminationKind::ContiguousBlocks;
  throw std::invalid_argument("unknown contamination kind '" + name + "'");
}

void ContaminationSpec::validate(std::size_t subcarriers, std::size_t symbols) const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("contamination: fraction must lie in [0, 1]");
  for (const Block& b : blocks)
    if (b.subcarrier + b.height > subcarriers || b.symbol + b.width > symbols)
      throw std::invalid_argument("contamination: block outside the grid");
  if (random_blocks > 0 && (block_size > subcarriers || block_size > symbols))
    throw std::invalid_argument("contamination: block larger than the grid");
}

ReMask contamination_mask(const ContaminationSpec& spec, std::size_t subcarriers, std::size_t symbols,
                          RngStream& rng) {
  spec.validate(subcarriers, symbols);
  ReMask mask(subcarriers, symbols);
  switch (spec.kind) {
    case ContaminationKind::None:
      break;
    case ContaminationKind::RandomREs: {
      const std::size_t total = subcarriers * symbols;
      const auto count = static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(total)));
      std::vector<std::size_t> idx(total);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
        std::swap(idx[i], idx[j]);
        mask.set(idx[i] / symbols, idx[i] % symbols);
      }
      break;
    }
    case ContaminationKind::ContiguousBlocks: {
      auto paint = [&](const Block& b) {
        for (std::size_t q = b.subcarrier; q < b.subcarrier + b.height; ++q)
          for (std::size_t n = b.symbol; n < b.symbol + b.width; ++n) mask.set(q, n);
      };
      for (const Block& b : spec.blocks) paint(b);
      const std::size_t s = spec.block_size;
      std::size_t placed = 0;
      std::size_t attempts = 0;
      while (placed < spec.random_blocks) {
        if (++attempts > 10000) throw std::invalid_argument("contamination: cannot place disjoint blocks");
        const Block b{static_cast<std::size_t>(rng.below(subcarriers - s + 1)),
                      static_cast<std::size_t>(rng.below(symbols - s + 1)), s, s};
        bool clear = true;
        for (std::size_t q = b.subcarrier; q < b.subcarrier + s && clear; ++q)
          for (std::size_t n = b.symbol; n < b.symbol + s; ++n)
            if (mask.contains(q, n)) {
              clear = false;
              break;
            }
        if (!clear) continue;
        paint(b);
        ++placed;
      }
      break;
    }
  }
  return mask;
}

std::string to_string(DataFill fill) { return fill == DataFill::Reference ? "reference" : "qpsk"; }

DataFill data_fill_from_string(const std::string& name) {
  if (name == "reference" || name == "known") return DataFill::Reference;
  if (name == "qpsk" || name == "data") return DataFill::Qpsk;
  throw std::invalid_argument("unknown data fill '" + name + "'");
}

SymbolPlan make_symbol_plan(const PilotAllocation& allocation, DataFill fill, RngStream& rng) {
  const std::size_t nf = allocation.subcarriers;
  const std::size_t nt = allocation.symbols;
  const std::size_t users = allocation.user_count();
  SymbolPlan plan;
  plan.subcarriers = nf;
  plan.symbols = nt;
  plan.values.assign(users, std::vector<cdouble>(nf * nt));
  plan.known.assign(users, std::vector<std::uint8_t>(nf * nt, 1));

  std::vector<std::uint8_t> pilot(nf * nt, 0);
  for (const auto& user : allocation.users)
    for (const PilotRe& re : user) pilot[re.subcarrier * nt + re.symbol] = 1;

  for (std::size_t k = 0; k < users; ++k) {
    const auto data = draw_qpsk(rng, nf * nt);
    for (std::size_t i = 0; i < nf * nt; ++i) {
      if (pilot[i]) continue;  // silent on pilot REs, own pilots written below
      plan.values[k][i] = data[i];
      plan.known[k][i] = fill == DataFill::Reference ? 1 : 0;
    }
    for (const PilotRe& re : allocation.users[k]) plan.values[k][re.subcarrier * nt + re.symbol] = re.value;
  }
  return plan;
}

double interference_power_ratio(double sir_db) { return std::pow(10.0, -sir_db / 10.0); }

ReceivedGrid build_received_grid(const SceneInputs& inputs, RngStream& rng) {
  const PilotAllocation& alloc = inputs.allocation;
  if (inputs.user_channels.empty() || inputs.user_channels.size() != alloc.user_count())
    throw DimensionMismatch("build_received_grid: one channel per allocated user required");
  const ComplexGrid& first = inputs.user_channels.front();
  const std::size_t m_count = first.antennas();
  const std::size_t nf = first.subcarriers();
  const std::size_t nt = first.symbols();
  for (const auto& h : inputs.user_channels)
    if (!h.same_shape(first)) throw DimensionMismatch("build_received_grid: user channels differ in shape");
  if (alloc.subcarriers != nf || alloc.symbols != nt || inputs.plan.subcarriers != nf || inputs.plan.symbols != nt)
    throw DimensionMismatch("build_received_grid: allocation does not match the channel grid");
  if (inputs.noise_variance < 0.0) throw std::invalid_argument("build_received_grid: negative noise variance");

  ReceivedGrid rx;
  rx.noise_variance = inputs.noise_variance;
  rx.plan = inputs.plan;
  rx.y = ComplexGrid(m_count, nf, nt);
  for (std::size_t k = 0; k < alloc.user_count(); ++k) {
    const double amp = std::sqrt(alloc.power[k]);
    const ComplexGrid& h = inputs.user_channels[k];
    for (std::size_t m = 0; m < m_count; ++m)
      for (std::size_t q = 0; q < nf; ++q)
        for (std::size_t n = 0; n < nt; ++n) {
          const cdouble s = inputs.plan.at(k, q, n);
          if (s != cdouble{}) rx.y(m, q, n) += amp * h(m, q, n) * s;
        }
  }

  rx.scene.user_channels = inputs.user_channels;
  rx.scene.noise_variance = inputs.noise_variance;
  rx.scene.contamination = contamination_mask(inputs.contamination, nf, nt, rng);
  if (!rx.scene.contamination.empty()) {
    ChannelModelSpec model = inputs.contamination.interferer.value_or(inputs.interferer_model);
    model.antennas = m_count;
    model.subcarriers = nf;
    model.symbols = nt;
    ComplexGrid hi = draw_channel(model, rng);
    const auto symbols = draw_qpsk(rng, rx.scene.contamination.count());
    rx.scene.interferer_power = alloc.power.front() * interference_power_ratio(inputs.contamination.sir_db);
    const double amp = std::sqrt(rx.scene.interferer_power);
    std::size_t next = 0;
    for (std::size_t q = 0; q < nf; ++q)
      for (std::size_t n = 0; n < nt; ++n) {
        if (!rx.scene.contamination.contains(q, n)) continue;
        const cdouble d = symbols[next++];
        for (std::size_t m = 0; m < m_count; ++m) rx.y(m, q, n) += amp * hi(m, q, n) * d;
      }
    rx.scene.interferer_channel = std::move(hi);
  }

  if (inputs.noise_variance > 0.0) {
    const auto z = draw_complex_gaussian(rng, rx.y.size(), inputs.noise_variance);
    auto y = rx.y.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += z[i];
  }
  return rx;
}

ComplexMatrix extract_user_signal(const ComplexGrid& y, const PilotAllocation& allocation, std::size_t user) {
  if (user >= allocation.user_count() || allocation.users[user].empty())
    throw Error("extract_user_signal: user " + std::to_string(user) + " has no pilots");
  if (y.subcarriers() != allocation.subcarriers || y.symbols() != allocation.symbols)
    throw DimensionMismatch("extract_user_signal: grid does not match the allocation");
  ComplexMatrix out = ComplexMatrix::Zero(y.antennas(), y.subcarriers());
  for (const PilotRe& re : allocation.users[user]) {
    const cdouble c = std::conj(re.value);
    for (std::size_t m = 0; m < y.antennas(); ++m) out(m, re.subcarrier) += c * y(m, re.subcarrier, re.symbol);
  }
  return out;
}

ComplexMatrix pilot_channel(const ChannelRealization& h, const PilotAllocation& allocation, std::size_t user) {
  if (user >= allocation.user_count() || allocation.users[user].empty())
    throw Error("pilot_channel: user " + std::to_string(user) + " has no pilots");
  ComplexMatrix out = ComplexMatrix::Zero(h.antennas(), h.subcarriers());
  std::vector<double> count(h.subcarriers(), 0.0);
  for (const PilotRe& re : allocation.users[user]) {
    count[re.subcarrier] += 1.0;
    for (std::size_t m = 0; m < h.antennas(); ++m) out(m, re.subcarrier) += h(m, re.subcarrier, re.symbol);
  }
  for (std::size_t q = 0; q < h.subcarriers(); ++q)
    if (count[q] > 0.0) out.col(static_cast<Eigen::Index>(q)) /= count[q];
  return out;
}

RealTensor3 pack_grid(const ComplexGrid& y) {
  const std::size_t m_count = y.antennas();
  RealTensor3 t(2 * m_count, y.subcarriers(), y.symbols());
  for (std::size_t m = 0; m < m_count; ++m)
    for (std::size_t q = 0; q < y.subcarriers(); ++q)
      for (std::size_t n = 0; n < y.symbols(); ++n) {
        t(m, q, n) = y(m, q, n).real();
        t(m_count + m, q, n) = y(m, q, n).imag();
      }
  return t;
}

ComplexGrid unpack_grid(const RealTensor3& t) {
  if (t.channels() % 2 != 0) throw DimensionMismatch("unpack_grid: odd channel count " + std::to_string(t.channels()));
  const std::size_t m_count = t.channels() / 2;
  ComplexGrid y(m_count, t.freq(), t.time());
  for (std::size_t m = 0; m < m_count; ++m)
    for (std::size_t q = 0; q < t.freq(); ++q)
      for (std::size_t n = 0; n < t.time(); ++n) y(m, q, n) = {t(m, q, n), t(m_count + m, q, n)};
  return y;
}

}  // namespace dce
