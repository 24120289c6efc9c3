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

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>

#include "dce/bench.hpp"

namespace dce {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Header `estimator,snr_db,sir_db,trial,metric,value`; sir_db is empty when absent.
void write_results_csv(std::span<const ResultRecord> records, std::ostream& out);
/// Header `estimator,snr_db,sir_db,metric,mean,std,trials,errors`.
void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out);

struct SweepOptions {
  std::string config_path;  // config file or a manifest.json to replay
  std::string preset;       // used when config_path is empty
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool dump_config = false;  // print the resolved config and exit
};

/// Exit codes: 0 ok, 1 invalid config, 2 runtime failure.
int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err);

struct GradcheckOptions {
  std::string arch = "small";  // small: l=3 k=4 4x8x8; medium: l=4 k=8 6x16x16
  double tolerance = 1e-5;
  std::uint64_t seed = 0;
};

/// Central finite differences against decoder_backward; 0 iff the maximum
/// relative error is below the tolerance, otherwise 2 with the worst coordinate.
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err);

struct FitOneOptions {
  std::string config_path;
  std::string preset;
  std::string estimator;  // decoder estimator id; first decoder estimator if empty
  std::optional<double> snr_db;  // first SNR of the config if unset
  std::size_t trial = 0;
  std::optional<std::uint64_t> seed;
  std::string dump_loss;  // `epoch,loss` CSV; stdout if empty
};

/// Fits the decoder on one grid exactly as the sweep would for user 0.
int cmd_fit_one(const FitOneOptions& options, std::ostream& out, std::ostream& err);

/// Prints k, epochs and weight counts of the M=1 (table 1) or M=64 (table 2) decoder presets; 2 on mismatch.
int cmd_tables(int table, std::ostream& out, std::ostream& err);

/// Loads the config named by a path (config or manifest) or a preset.
ExperimentConfig resolve_config(const std::string& path, const std::string& preset);

}  // namespace dce
