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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dce/channels.hpp"
#include "dce/rng.hpp"
#include "dce/tensor.hpp"

namespace dce {

enum class PilotArrangement { BlockSymbol, RandomTones };

std::string to_string(PilotArrangement arrangement);
PilotArrangement pilot_arrangement_from_string(const std::string& name);

struct PilotRe {
  std::size_t subcarrier;
  std::size_t symbol;
  cdouble value;  // unit modulus
};

/// Pilot resource elements of every in-cell user.
///
/// Each user holds exactly `pilot_length` REs on every subcarrier, so the
/// per-subcarrier correlation against the pilot yields N_p * H. RE sets of
/// different users are disjoint.
struct PilotAllocation {
  std::size_t subcarriers = 0;
  std::size_t symbols = 0;
  std::size_t pilot_length = 1;
  PilotArrangement arrangement = PilotArrangement::BlockSymbol;
  std::vector<std::vector<PilotRe>> users;  // users[k] sorted by (subcarrier, symbol)
  std::vector<double> power;                // rho_k, linear

  std::size_t user_count() const noexcept { return users.size(); }
};

/// BlockSymbol: user k owns OFDM symbols [k N_p, (k+1) N_p) on every subcarrier.
/// RandomTones: on every subcarrier, K*N_p distinct symbols are drawn without
/// replacement and dealt N_p per user. Pilot values are random QPSK.
/// Throws InsufficientResources when K * N_p exceeds the symbol count.
PilotAllocation make_pilot_allocation(std::size_t users, std::size_t pilot_length, PilotArrangement arrangement,
                                      std::size_t subcarriers, std::size_t symbols, RngStream& rng,
                                      double power = 1.0);

/// Boolean N_f x N mask over resource elements.
class ReMask {
 public:
  ReMask() = default;
  ReMask(std::size_t subcarriers, std::size_t symbols) : subcarriers_(subcarriers), symbols_(symbols), bits_(subcarriers * symbols, 0) {}

  bool contains(std::size_t q, std::size_t n) const { return bits_[q * symbols_ + n] != 0; }
  void set(std::size_t q, std::size_t n) { bits_[q * symbols_ + n] = 1; }
  std::size_t count() const noexcept;
  std::size_t subcarriers() const noexcept { return subcarriers_; }
  std::size_t symbols() const noexcept { return symbols_; }
  bool empty() const noexcept { return count() == 0; }

 private:
  std::size_t subcarriers_ = 0;
  std::size_t symbols_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class ContaminationKind { None, RandomREs, ContiguousBlocks };

std::string to_string(ContaminationKind kind);
ContaminationKind contamination_kind_from_string(const std::string& name);

struct Block {
  std::size_t subcarrier;  // first subcarrier
  std::size_t symbol;      // first symbol
  std::size_t height = 8;
  std::size_t width = 8;
};

struct ContaminationSpec {
  ContaminationKind kind = ContaminationKind::None;
  double fraction = 0.0;             // RandomREs
  std::vector<Block> blocks;         // ContiguousBlocks, fixed placement
  std::size_t random_blocks = 0;     // ContiguousBlocks, randomly placed non-overlapping 8x8 blocks
  std::size_t block_size = 8;
  double sir_db = 6.0;
  std::optional<ChannelModelSpec> interferer;  // defaults to the users' channel model

  void validate(std::size_t subcarriers, std::size_t symbols) const;
};

/// RandomREs: floor(fraction * N_f * N) REs without replacement.
/// ContiguousBlocks: union of the fixed blocks plus `random_blocks` randomly
/// placed, mutually disjoint squares.
ReMask contamination_mask(const ContaminationSpec& spec, std::size_t subcarriers, std::size_t symbols, RngStream& rng);

/// What the serving users transmit outside their pilot REs.
enum class DataFill {
  Reference,  // unit-modulus symbols known to the receiver
  Qpsk,       // unknown random QPSK data
};

std::string to_string(DataFill fill);
DataFill data_fill_from_string(const std::string& name);

/// Per-user transmitted symbols over the N_f x N grid.
struct SymbolPlan {
  std::size_t subcarriers = 0;
  std::size_t symbols = 0;
  std::vector<std::vector<cdouble>> values;  // values[k][q * N + n]
  std::vector<std::vector<std::uint8_t>> known;

  cdouble at(std::size_t k, std::size_t q, std::size_t n) const { return values[k][q * symbols + n]; }
  bool is_known(std::size_t k, std::size_t q, std::size_t n) const { return known[k][q * symbols + n] != 0; }
};

/// Pilot values on each user's pilot REs, silence on the other users' pilot
/// REs and `fill` symbols on the remaining data REs.
SymbolPlan make_symbol_plan(const PilotAllocation& allocation, DataFill fill, RngStream& rng);

/// Ground truth that produced a received grid.
struct ChannelScene {
  std::vector<ChannelRealization> user_channels;
  std::optional<ChannelRealization> interferer_channel;
  ReMask contamination;
  double interferer_power = 0.0;
  double noise_variance = 0.0;
};

struct ReceivedGrid {
  ComplexGrid y;
  double noise_variance = 0.0;
  ChannelScene scene;
  SymbolPlan plan;
};

/// Everything build_received_grid needs besides the random stream.
struct SceneInputs {
  std::vector<ChannelRealization> user_channels;
  PilotAllocation allocation;
  SymbolPlan plan;
  double noise_variance = 0.0;
  ContaminationSpec contamination;
  ChannelModelSpec interferer_model;  // used when contamination.interferer is unset
};

/// Y = sum_k sqrt(rho_k) H_k s_k + interference on masked REs + CN(0, sigma^2) noise.
/// The interferer transmits random QPSK at rho_i = rho_0 10^(-SIR/10).
ReceivedGrid build_received_grid(const SceneInputs& inputs, RngStream& rng);

/// rho_i / rho_k for a given SIR in dB.
double interference_power_ratio(double sir_db);

/// Y_k[m,q] = sum over user k's pilot REs on subcarrier q of conj(x) Y[m,q,n].
ComplexMatrix extract_user_signal(const ComplexGrid& y, const PilotAllocation& allocation, std::size_t user);

/// Channel seen on user k's pilot REs, averaged over the N_p REs of each subcarrier.
ComplexMatrix pilot_channel(const ChannelRealization& h, const PilotAllocation& allocation, std::size_t user);

/// Channels 0..M-1 hold real parts, M..2M-1 imaginary parts.
RealTensor3 pack_grid(const ComplexGrid& y);
/// Throws DimensionMismatch on an odd channel count.
ComplexGrid unpack_grid(const RealTensor3& t);

}  // namespace dce
