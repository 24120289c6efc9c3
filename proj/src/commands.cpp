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

#include "dce/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dce/config.hpp"
#include "dce/errors.hpp"

#ifndef DCE_VERSION
#define DCE_VERSION "0.0.0"
#endif

namespace dce {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_results_csv(std::span<const ResultRecord> records, std::ostream& out) {
  out << "estimator,snr_db,sir_db,trial,metric,value\n";
  for (const auto& r : records) {
    out << r.estimator << ',' << format_double(r.snr_db) << ',' << (r.sir_db ? format_double(*r.sir_db) : "") << ','
        << r.trial << ',' << r.metric << ',' << format_double(r.value) << '\n';
  }
}

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << "estimator,snr_db,sir_db,metric,mean,std,trials,errors\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << format_double(r.snr_db) << ',' << (r.sir_db ? format_double(*r.sir_db) : "") << ','
        << r.metric << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << ',' << r.trials << ','
        << r.errors << '\n';
  }
}

ExperimentConfig resolve_config(const std::string& path, const std::string& preset) {
  if (path.empty()) {
    if (preset.empty()) throw ConfigError("<config>", "give a config file or --preset");
    return parse_config(preset_json(preset));
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>", "cannot read '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  // A manifest carries the resolved config under "config".
  if (doc.is_object() && doc.contains("artifact") && doc.contains("config")) return parse_config(doc.at("config"));
  return parse_config(doc);
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = resolve_config(options.config_path, options.preset);
    if (options.seed) config.seed = *options.seed;
    if (options.threads) {
      if (*options.threads == 0) throw ConfigError("run.threads", "must be >= 1");
      config.threads = *options.threads;
    }
    config.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  if (options.dump_config) {
    out << to_json(config).dump(2) << '\n';
    return 0;
  }

  try {
    const std::string started = utc_timestamp();
    const auto records = run_experiment(config);
    const auto summary = summarize(records);

    const fs::path dir(options.out_dir);
    fs::create_directories(dir);
    std::ostringstream results, summary_text;
    write_results_csv(records, results);
    write_summary_csv(summary, summary_text);
    write_file(dir / "results.csv", results.str());
    write_file(dir / "summary.csv", summary_text.str());

    json manifest = {{"artifact", "dce"},
                     {"version", DCE_VERSION},
                     {"seed", config.seed},
                     {"started", started},
                     {"config", to_json(config)},
                     {"outputs", {{"results", "results.csv"}, {"summary", "summary.csv"}, {"manifest", "manifest.json"}}}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::size_t errors = 0;
    for (const auto& r : records) errors += r.error ? 1 : 0;
    out << "wrote " << records.size() << " records to " << (dir / "results.csv").string();
    if (errors) out << " (" << errors << " error records)";
    out << '\n';
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err) {
  DecoderArch arch;
  if (options.arch == "small") {
    arch.layers = 3;
    arch.width = 4;
    arch.out_channels = 4;
    arch.out_freq = 8;
    arch.out_time = 8;
  } else if (options.arch == "medium") {
    arch.layers = 4;
    arch.width = 8;
    arch.out_channels = 6;
    arch.out_freq = 16;
    arch.out_time = 16;
  } else {
    err << "error: unknown arch '" << options.arch << "' (small, medium)\n";
    return 1;
  }
  if (!(options.tolerance > 0.0)) {
    err << "error: tolerance must be positive\n";
    return 1;
  }

  try {
    RngStream rng(options.seed, 0x67726164ULL);
    const RealTensor3 input = draw_decoder_input(arch, rng);
    DecoderParams params = init_params(arch, rng);
    RealTensor3 target(arch.out_channels, arch.out_freq, arch.out_time);
    const auto t = draw_uniform(rng, target.size(), -1.0, 1.0);
    std::copy(t.begin(), t.end(), target.data().begin());

    const LossAndGradient exact = decoder_backward(arch, params, input, target);
    auto loss_at = [&](const DecoderParams& p) {
      const RealTensor3 y = decoder_forward(arch, p, input);
      double l = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = target.data()[i] - y.data()[i];
        l += d * d;
      }
      return l;
    };

    const double h = 1e-5;
    double worst = 0.0;
    std::size_t worst_index = 0;
    double worst_exact = 0.0, worst_numeric = 0.0;
    auto values = params.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      const double up = loss_at(params);
      values[i] = keep - h;
      const double down = loss_at(params);
      values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double a = exact.grads.values()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      if (rel > worst) {
        worst = rel;
        worst_index = i;
        worst_exact = a;
        worst_numeric = numeric;
      }
    }
    out << "arch " << options.arch << ": " << values.size() << " parameters, max relative error "
        << format_double(worst) << '\n';
    if (worst < options.tolerance) return 0;
    err << "gradcheck failed: parameter " << worst_index << " analytic " << format_double(worst_exact)
        << " numeric " << format_double(worst_numeric) << " relative error " << format_double(worst)
        << " > tolerance " << format_double(options.tolerance) << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_fit_one(const FitOneOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  std::size_t est_index = 0;
  std::size_t snr_index = 0;
  try {
    config = resolve_config(options.config_path, options.preset);
    if (options.seed) config.seed = *options.seed;
    bool found = false;
    for (std::size_t e = 0; e < config.estimators.size() && !found; ++e) {
      const auto& est = config.estimators[e];
      if (est.kind != EstimatorKind::Dce) continue;
      if (options.estimator.empty() || est.id == options.estimator) {
        est_index = e;
        found = true;
      }
    }
    if (!found)
      throw ConfigError("estimators", options.estimator.empty() ? "no decoder estimator in the config"
                                                                : "no decoder estimator '" + options.estimator + "'");
    if (options.snr_db) {
      found = false;
      for (std::size_t s = 0; s < config.snr_db.size() && !found; ++s)
        if (config.snr_db[s] == *options.snr_db) {
          snr_index = s;
          found = true;
        }
      if (!found) {
        // Off-grid SNR: run it as its own single-point grid.
        config.snr_db = {*options.snr_db};
        snr_index = 0;
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    const RngStream cell = cell_stream(config.seed, options.trial, snr_index);
    RngStream scene_rng = cell.derive(0);
    const TrialScene scene = make_trial_scene(config, config.snr_db[snr_index], scene_rng);
    RngStream fit_rng = cell.derive(100 + est_index).derive(0);
    const DceResult result = dce_estimate(scene.rx, scene.allocation, 0, config.estimators[est_index].dce, fit_rng);
    const ComplexMatrix ls =
        ls_estimate(extract_user_signal(scene.rx.y, scene.allocation, 0), scene.allocation.power[0],
                    config.pilot_length)
            .gains;

    std::ofstream file;
    std::ostream* trace = &out;
    if (!options.dump_loss.empty()) {
      file.open(options.dump_loss, std::ios::binary);
      if (!file) throw Error("cannot write '" + options.dump_loss + "'");
      trace = &file;
    }
    *trace << "epoch,loss\n";
    for (std::size_t i = 0; i < result.fit.loss_trace.size(); ++i)
      *trace << i << ',' << format_double(result.fit.loss_trace[i]) << '\n';
    out << "final_nmse," << format_double(nmse(scene.truth[0], result.estimate.gains)) << '\n';
    out << "ls_nmse," << format_double(nmse(scene.truth[0], ls)) << '\n';
    return 0;
  } catch (const NonFiniteLoss& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_tables(int table, std::ostream& out, std::ostream& err) {
  if (table != 1 && table != 2) {
    err << "error: --table must be 1 or 2\n";
    return 1;
  }
  const std::size_t antennas = table == 1 ? 1 : 64;
  out << "k,epochs,weights,expected\n";
  bool ok = true;
  for (const auto& p : dce_presets()) {
    if (p.antennas != antennas) continue;
    DecoderArch arch;
    arch.width = p.width;
    arch.out_channels = 2 * antennas;
    const std::size_t w = weight_count(arch);
    out << p.width << ',' << p.epochs << ',' << w << ',' << p.weights << '\n';
    if (w != p.weights) {
      err << "mismatch for k=" << p.width << ": computed " << w << ", expected " << p.weights << '\n';
      ok = false;
    }
  }
  return ok ? 0 : 2;
}

}  // namespace dce
