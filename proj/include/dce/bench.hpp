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
#include <span>
#include <string>
#include <vector>

#include "dce/channels.hpp"
#include "dce/estimators.hpp"
#include "dce/signal_model.hpp"

namespace dce {

// ---- metrics -------------------------------------------------------------

/// ||H - H_hat||^2 / ||H||^2; throws ZeroReference when ||H|| = 0.
double nmse(const ComplexMatrix& truth, const ComplexMatrix& estimate);
double nmse(const ComplexGrid& truth, const ComplexGrid& estimate);

/// ||n - n_fit||^2 / ||n||^2; throws ZeroReference when ||n|| = 0.
double noise_suppression_ratio(const RealTensor3& noise, const RealTensor3& fitted);

enum class Combiner { MR, ZF, MMSE };
std::string to_string(Combiner combiner);
Combiner combiner_from_string(const std::string& name);

enum class SePrefactor {
  AsPaper,           // N_p / N
  OneMinusOverhead,  // (N - N_p) / N
};
std::string to_string(SePrefactor prefactor);
SePrefactor se_prefactor_from_string(const std::string& name);

double se_prefactor(SePrefactor prefactor, std::size_t pilot_length, std::size_t coherence);

/// prefactor * log2(1 + sinr)
double spectral_efficiency(double sinr, std::size_t pilot_length, std::size_t coherence,
                           SePrefactor prefactor = SePrefactor::AsPaper);

struct SeParams {
  Combiner combiner = Combiner::MR;
  double power = 1.0;
  double noise_variance = 1.0;
  std::size_t pilot_length = 1;
  std::size_t coherence = 64;
  SePrefactor prefactor = SePrefactor::AsPaper;
};

struct SeResult {
  std::vector<double> per_user;         // SE averaged over subcarriers
  std::vector<double> mean_sinr;        // linear SINR averaged over subcarriers
  std::vector<double> interference;     // mean sum_{i != k} rho |v^H h_i|^2 per user
  bool singular = false;                // some subcarrier had a singular ZF Gram matrix

  double sum() const;
};

/// Uplink SINR and SE per user. truth/estimates hold one M x N_f matrix per
/// user; combiners are built per subcarrier from the estimates and applied to
/// the true channels. Requires K <= M.
SeResult sinr_and_se(std::span<const ComplexMatrix> truth, std::span<const ComplexMatrix> estimates,
                     const SeParams& params);

// ---- experiment runner ---------------------------------------------------

enum class EstimatorKind { Ls, MmseGenie, MmseSample, Dce };
std::string to_string(EstimatorKind kind);

struct EstimatorConfig {
  std::string id;
  EstimatorKind kind = EstimatorKind::Ls;
  DceOptions dce;              // Dce
  std::string preset;          // Dce, informational
  std::size_t training = 500;  // MmseSample
};

struct SeConfig {
  bool enable = false;
  std::vector<Combiner> combiners;
  SePrefactor prefactor = SePrefactor::AsPaper;
};

struct ExperimentConfig {
  ChannelModelSpec channel;
  std::size_t users = 1;
  std::size_t pilot_length = 1;
  PilotArrangement arrangement = PilotArrangement::BlockSymbol;
  DataFill fill = DataFill::Reference;
  double power = 1.0;
  std::vector<double> snr_db;
  ContaminationSpec contamination;
  std::vector<EstimatorConfig> estimators;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  SeConfig se;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

struct ResultRecord {
  std::string estimator;
  double snr_db = 0.0;
  std::optional<double> sir_db;
  std::size_t trial = 0;
  std::string metric;  // "nmse" or "se"
  double value = 0.0;
  bool error = false;
  std::string message;

  bool operator==(const ResultRecord&) const = default;
};

/// Runs every (SNR, trial) cell. Trial randomness is keyed by (seed, trial,
/// SNR index) so results do not depend on `threads`. Records are ordered by
/// estimator, SNR, trial; SE records (estimator "<id>+<combiner>") follow the
/// NMSE records. Estimator failures become error records.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& config);

struct SummaryRow {
  std::string estimator;
  double snr_db = 0.0;
  std::optional<double> sir_db;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t trials = 0;  // including error records
  std::size_t errors = 0;  // mean and stddev skip these
};

/// Mean and sample standard deviation per (estimator, SNR, metric), in record order.
std::vector<SummaryRow> summarize(std::span<const ResultRecord> records);

/// One Monte Carlo cell, exposed for tests and bindings.
struct TrialScene {
  PilotAllocation allocation;
  ReceivedGrid rx;
  std::vector<ComplexMatrix> truth;  // pilot-position channel per user
};

/// Root stream of one (trial, SNR) cell; the scene uses derive(0), estimator e
/// uses derive(100 + e) and user k of a decoder estimator derive(100 + e).derive(k).
RngStream cell_stream(std::uint64_t seed, std::size_t trial, std::size_t snr_index);

TrialScene make_trial_scene(const ExperimentConfig& config, double snr_db, RngStream& rng);

/// Noise variance for a given SNR (dB) at transmit power rho: rho / 10^(snr/10).
double noise_variance_for_snr(double snr_db, double power = 1.0);

}  // namespace dce
