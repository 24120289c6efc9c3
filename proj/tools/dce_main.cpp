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

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dce/cli.hpp"

namespace {

std::optional<std::size_t> env_threads() {
  const char* v = std::getenv("DCE_THREADS");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != std::string(v).size() || n == 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    std::cerr << "warning: ignoring DCE_THREADS='" << v << "'\n";
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Untrained deep channel estimation workbench"};
  app.set_version_flag("--version", DCE_VERSION);
  app.require_subcommand(1);

  dce::SweepOptions sweep;
  std::uint64_t sweep_seed = 0;
  std::size_t sweep_threads = 0;
  auto* cmd_sweep = app.add_subcommand("sweep", "Run a Monte Carlo experiment");
  cmd_sweep->add_option("config", sweep.config_path, "Config JSON or a manifest.json to replay");
  cmd_sweep->add_option("--preset", sweep.preset, "Built-in experiment (fig1, fig4, fig5, fig6, fig7a, fig7b, iid_control)");
  cmd_sweep->add_option("--out", sweep.out_dir, "Output directory")->capture_default_str();
  auto* seed_opt = cmd_sweep->add_option("--seed", sweep_seed, "Base seed (overrides run.seed)");
  auto* threads_opt = cmd_sweep->add_option("--threads", sweep_threads, "Worker threads (env DCE_THREADS)");
  cmd_sweep->add_flag("--dump-config", sweep.dump_config, "Print the resolved config and exit");

  dce::GradcheckOptions grad;
  auto* cmd_grad = app.add_subcommand("gradcheck", "Finite-difference check of the decoder gradient");
  cmd_grad->add_option("--arch", grad.arch, "small or medium")->capture_default_str();
  cmd_grad->add_option("--tolerance", grad.tolerance, "Maximum relative error")->capture_default_str();
  cmd_grad->add_option("--seed", grad.seed, "Seed")->capture_default_str();

  dce::FitOneOptions fit;
  double fit_snr = 0.0;
  std::uint64_t fit_seed = 0;
  auto* cmd_fit = app.add_subcommand("fit-one", "Fit the decoder on a single grid and dump the loss trace");
  cmd_fit->add_option("config", fit.config_path, "Config JSON");
  cmd_fit->add_option("--preset", fit.preset, "Built-in experiment");
  cmd_fit->add_option("--estimator", fit.estimator, "Decoder estimator id");
  auto* fit_snr_opt = cmd_fit->add_option("--snr", fit_snr, "SNR in dB");
  cmd_fit->add_option("--trial", fit.trial, "Trial index")->capture_default_str();
  auto* fit_seed_opt = cmd_fit->add_option("--seed", fit_seed, "Base seed");
  cmd_fit->add_option("--dump-loss", fit.dump_loss, "Write the epoch,loss CSV here");

  int table = 1;
  auto* cmd_tab = app.add_subcommand("tables", "Print decoder weight-count tables");
  cmd_tab->add_option("--table", table, "1 (M=1) or 2 (M=64)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (cmd_sweep->parsed()) {
    if (seed_opt->count()) sweep.seed = sweep_seed;
    if (threads_opt->count())
      sweep.threads = sweep_threads;
    else
      sweep.threads = env_threads();
    return dce::cmd_sweep(sweep, std::cout, std::cerr);
  }
  if (cmd_grad->parsed()) return dce::cmd_gradcheck(grad, std::cout, std::cerr);
  if (cmd_fit->parsed()) {
    if (fit_snr_opt->count()) fit.snr_db = fit_snr;
    if (fit_seed_opt->count()) fit.seed = fit_seed;
    return dce::cmd_fit_one(fit, std::cout, std::cerr);
  }
  if (cmd_tab->parsed()) return dce::cmd_tables(table, std::cout, std::cerr);
  return 1;
}
