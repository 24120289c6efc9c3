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

#include "dce/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "dce/errors.hpp"
#include "dce/linalg.hpp"

namespace dce {

namespace {

double ratio_or_throw(double num, double den, const char* what) {
  if (!(den > 0.0)) throw ZeroReference(what);
  return num / den;
}

}  // namespace

double nmse(const ComplexMatrix& truth, const ComplexMatrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw DimensionMismatch("nmse: shapes differ");
  return ratio_or_throw((truth - estimate).squaredNorm(), truth.squaredNorm(), "nmse: reference channel is zero");
}

double nmse(const ComplexGrid& truth, const ComplexGrid& estimate) {
  if (!truth.same_shape(estimate)) throw DimensionMismatch("nmse: shapes differ");
  const auto a = truth.data();
  const auto b = estimate.data();
  double err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) err += std::norm(a[i] - b[i]);
  return ratio_or_throw(err, truth.squared_norm(), "nmse: reference channel is zero");
}

double noise_suppression_ratio(const RealTensor3& noise, const RealTensor3& fitted) {
  if (!noise.same_shape(fitted)) throw DimensionMismatch("noise_suppression_ratio: shapes differ");
  const auto a = noise.data();
  const auto b = fitted.data();
  double err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) err += (a[i] - b[i]) * (a[i] - b[i]);
  return ratio_or_throw(err, noise.squared_norm(), "noise_suppression_ratio: zero-norm noise");
}

std::string to_string(Combiner combiner) {
  switch (combiner) {
    case Combiner::MR: return "mr";
    case Combiner::ZF: return "zf";
    case Combiner::MMSE: return "mmse";
  }
  return "?";
}

Combiner combiner_from_string(const std::string& name) {
  if (name == "mr" || name == "MR") return Combiner::MR;
  if (name == "zf" || name == "ZF") return Combiner::ZF;
  if (name == "mmse" || name == "MMSE") return Combiner::MMSE;
  throw std::invalid_argument("unknown combiner '" + name + "'");
}

std::string to_string(SePrefactor prefactor) {
  return prefactor == SePrefactor::AsPaper ? "as_paper" : "one_minus_overhead";
}

SePrefactor se_prefactor_from_string(const std::string& name) {
  if (name == "as_paper") return SePrefactor::AsPaper;
  if (name == "one_minus_overhead") return SePrefactor::OneMinusOverhead;
  throw std::invalid_argument("unknown SE prefactor '" + name + "'");
}

double se_prefactor(SePrefactor prefactor, std::size_t pilot_length, std::size_t coherence) {
  if (coherence == 0 || pilot_length > coherence)
    throw std::invalid_argument("se_prefactor: need 0 <= N_p <= N and N > 0");
  const double np = static_cast<double>(pilot_length);
  const double n = static_cast<double>(coherence);
  return prefactor == SePrefactor::AsPaper ? np / n : (n - np) / n;
}

double spectral_efficiency(double sinr, std::size_t pilot_length, std::size_t coherence, SePrefactor prefactor) {
  if (sinr < 0.0) throw std::invalid_argument("spectral_efficiency: negative SINR");
  return se_prefactor(prefactor, pilot_length, coherence) * std::log2(1.0 + sinr);
}

double SeResult::sum() const {
  double s = 0.0;
  for (double v : per_user) s += v;
  return s;
}

SeResult sinr_and_se(std::span<const ComplexMatrix> truth, std::span<const ComplexMatrix> estimates,
                     const SeParams& params) {
  const std::size_t k_users = truth.size();
  if (k_users == 0 || estimates.size() != k_users) throw DimensionMismatch("sinr_and_se: one estimate per user");
  const auto m = truth.front().rows();
  const auto nf = truth.front().cols();
  for (std::size_t k = 0; k < k_users; ++k)
    if (truth[k].rows() != m || truth[k].cols() != nf || estimates[k].rows() != m || estimates[k].cols() != nf)
      throw DimensionMismatch("sinr_and_se: channel shapes differ");
  if (static_cast<Eigen::Index>(k_users) > m) throw std::invalid_argument("sinr_and_se: need K <= M");
  if (params.power <= 0.0 || params.noise_variance < 0.0)
    throw std::invalid_argument("sinr_and_se: need rho > 0 and sigma^2 >= 0");

  const auto kk = static_cast<Eigen::Index>(k_users);
  const double pref = se_prefactor(params.prefactor, params.pilot_length, params.coherence);
  SeResult out;
  out.per_user.assign(k_users, 0.0);
  out.mean_sinr.assign(k_users, 0.0);
  out.interference.assign(k_users, 0.0);

  ComplexMatrix h(m, kk), hh(m, kk), v(m, kk);
  for (Eigen::Index q = 0; q < nf; ++q) {
    for (Eigen::Index k = 0; k < kk; ++k) {
      h.col(k) = truth[k].col(q);
      hh.col(k) = estimates[k].col(q);
    }
    bool usable = true;
    switch (params.combiner) {
      case Combiner::MR:
        v = hh;
        break;
      case Combiner::ZF:
        try {
          const ComplexMatrix gram = hh.adjoint() * hh;
          v = hh * hermitian_solve(gram, ComplexMatrix::Identity(kk, kk));
        } catch (const NotPositiveDefinite&) {
          usable = false;
        }
        break;
      case Combiner::MMSE: {
        // (rho H H^H + s I)^-1 H = H (rho H^H H + s I)^-1, a K x K solve.
        ComplexMatrix a = params.power * (hh.adjoint() * hh);
        a.diagonal().array() += params.noise_variance;
        try {
          v = hh * hermitian_solve(a, ComplexMatrix::Identity(kk, kk));
        } catch (const NotPositiveDefinite&) {
          usable = false;
        }
        break;
      }
    }
    if (!usable) {
      out.singular = true;
      continue;
    }
    const ComplexMatrix g = v.adjoint() * h;  // g(k, i) = v_k^H h_i
    for (Eigen::Index k = 0; k < kk; ++k) {
      const double signal = params.power * std::norm(g(k, k));
      const double leak = params.power * (g.row(k).squaredNorm() - std::norm(g(k, k)));
      const double denom = std::max(leak, 0.0) + params.noise_variance * v.col(k).squaredNorm();
      double sinr = 0.0;
      if (denom > 0.0)
        sinr = signal / denom;
      else if (signal > 0.0)
        sinr = std::numeric_limits<double>::infinity();
      out.mean_sinr[k] += sinr;
      out.per_user[k] += pref * std::log2(1.0 + sinr);
      out.interference[k] += std::max(leak, 0.0);
    }
  }
  const double inv = 1.0 / static_cast<double>(nf);
  for (std::size_t k = 0; k < k_users; ++k) {
    out.per_user[k] *= inv;
    out.mean_sinr[k] *= inv;
    out.interference[k] *= inv;
  }
  return out;
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Ls: return "ls";
    case EstimatorKind::MmseGenie: return "mmse_genie";
    case EstimatorKind::MmseSample: return "mmse_sample";
    case EstimatorKind::Dce: return "dce";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (channel.antennas == 0) throw ConfigError("grid.m", "must be >= 1");
  if (channel.subcarriers == 0) throw ConfigError("grid.n_f", "must be >= 1");
  if (channel.symbols == 0) throw ConfigError("grid.n", "must be >= 1");
  try {
    channel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("channel", e.what());
  }
  if (users == 0) throw ConfigError("grid.k_users", "must be >= 1");
  if (pilot_length == 0) throw ConfigError("grid.n_p", "must be >= 1");
  if (users * pilot_length > channel.symbols)
    throw ConfigError("grid.n_p", "k_users * n_p exceeds the number of symbols");
  if (!(power > 0.0) || !std::isfinite(power)) throw ConfigError("grid.power", "must be positive");
  if (snr_db.empty()) throw ConfigError("noise.snr_db", "must be a non-empty list");
  for (double s : snr_db)
    if (!std::isfinite(s)) throw ConfigError("noise.snr_db", "entries must be finite");
  try {
    contamination.validate(channel.subcarriers, channel.symbols);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("contamination", e.what());
  }
  if (estimators.empty()) throw ConfigError("estimators", "must list at least one estimator");
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    const auto& e = estimators[i];
    const std::string key = "estimators[" + std::to_string(i) + "]";
    if (e.id.empty()) throw ConfigError(key + ".id", "must be non-empty");
    if (e.id.find_first_of(",\"\n") != std::string::npos) throw ConfigError(key + ".id", "must not contain , \" or newline");
    for (std::size_t j = 0; j < i; ++j)
      if (estimators[j].id == e.id) throw ConfigError(key + ".id", "duplicate id '" + e.id + "'");
    if (e.kind == EstimatorKind::Dce) {
      if (e.dce.layers < 1) throw ConfigError(key + ".params.layers", "must be >= 1");
      if (e.dce.width < 1) throw ConfigError(key + ".params.k", "must be >= 1");
      if (e.dce.epochs < 1) throw ConfigError(key + ".params.epochs", "must be >= 1");
      if (!(e.dce.lr > 0.0)) throw ConfigError(key + ".params.lr", "must be positive");
      const std::size_t scale = std::size_t{1} << (e.dce.layers - 1);
      if (channel.subcarriers % scale != 0 || channel.symbols % scale != 0)
        throw ConfigError(key + ".params.layers", "grid size must be divisible by 2^(layers-1)");
    }
    if (e.kind == EstimatorKind::MmseSample && e.training == 0)
      throw ConfigError(key + ".params.training", "must be >= 1");
  }
  if (trials == 0) throw ConfigError("run.trials", "must be >= 1");
  if (threads == 0) throw ConfigError("run.threads", "must be >= 1");
  if (se.enable) {
    if (se.combiners.empty()) throw ConfigError("se.combiners", "must be non-empty when se.enable is true");
    if (users > channel.antennas) throw ConfigError("grid.k_users", "SE needs k_users <= m");
  }
}

double noise_variance_for_snr(double snr_db, double power) { return power / std::pow(10.0, snr_db / 10.0); }

RngStream cell_stream(std::uint64_t seed, std::size_t trial, std::size_t snr_index) {
  return RngStream(seed, trial).derive(snr_index);
}

TrialScene make_trial_scene(const ExperimentConfig& config, double snr_db, RngStream& rng) {
  const auto& ch = config.channel;
  TrialScene scene;
  RngStream alloc_rng = rng.derive(1);
  RngStream plan_rng = rng.derive(2);
  RngStream chan_rng = rng.derive(3);
  RngStream grid_rng = rng.derive(4);
  scene.allocation = make_pilot_allocation(config.users, config.pilot_length, config.arrangement, ch.subcarriers,
                                           ch.symbols, alloc_rng, config.power);
  SceneInputs in;
  in.allocation = scene.allocation;
  in.plan = make_symbol_plan(scene.allocation, config.fill, plan_rng);
  for (std::size_t k = 0; k < config.users; ++k) in.user_channels.push_back(draw_channel(ch, chan_rng));
  in.noise_variance = noise_variance_for_snr(snr_db, config.power);
  in.contamination = config.contamination;
  in.interferer_model = ch;
  scene.rx = build_received_grid(in, grid_rng);
  for (std::size_t k = 0; k < config.users; ++k)
    scene.truth.push_back(pilot_channel(scene.rx.scene.user_channels[k], scene.allocation, k));
  return scene;
}

namespace {

constexpr std::uint64_t kTrainingStream = 0x7472616e696e67ULL;

// Covariance estimated from T independent LS estimates at the given SNR.
CovarianceModel train_sample_covariance(const ExperimentConfig& config, std::size_t training, double noise_variance,
                                        RngStream rng) {
  const double floor = noise_variance / (config.power * static_cast<double>(config.pilot_length));
  std::vector<ComplexMatrix> ls(training);
  for (std::size_t t = 0; t < training; ++t) {
    const ComplexGrid h = draw_channel(config.channel, rng);
    ComplexMatrix e = h.symbol_slice(0);
    const auto z = draw_complex_gaussian(rng, static_cast<std::size_t>(e.size()), floor);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < e.rows(); ++r)
      for (Eigen::Index c = 0; c < e.cols(); ++c) e(r, c) += z[i++];
    ls[t] = std::move(e);
  }
  return sample_covariance(ls, noise_variance, config.power, config.pilot_length);
}

struct EstimatorOutcome {
  std::vector<ComplexMatrix> estimates;  // per user
  double nmse = 0.0;
  bool error = false;
  std::string message;
};

struct CellOutcome {
  std::vector<EstimatorOutcome> estimators;
  std::vector<std::vector<double>> se;  // [estimator][combiner]
  std::vector<std::vector<bool>> se_error;
};

CellOutcome run_cell(const ExperimentConfig& config, std::size_t snr_index, std::size_t trial,
                     const CovarianceModel& genie, const std::vector<std::optional<CovarianceModel>>& sampled) {
  const double snr = config.snr_db[snr_index];
  const RngStream cell_rng = cell_stream(config.seed, trial, snr_index);
  RngStream scene_rng = cell_rng.derive(0);
  const TrialScene scene = make_trial_scene(config, snr, scene_rng);
  const std::size_t k_users = config.users;

  CellOutcome out;
  out.estimators.resize(config.estimators.size());
  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    const EstimatorConfig& est = config.estimators[e];
    EstimatorOutcome& o = out.estimators[e];
    try {
      RngStream est_rng = cell_rng.derive(100 + e);
      for (std::size_t k = 0; k < k_users; ++k) {
        const double rho = scene.allocation.power[k];
        ComplexMatrix gains;
        switch (est.kind) {
          case EstimatorKind::Ls:
            gains = ls_estimate(extract_user_signal(scene.rx.y, scene.allocation, k), rho, config.pilot_length).gains;
            break;
          case EstimatorKind::MmseGenie:
            gains = mmse_estimate(extract_user_signal(scene.rx.y, scene.allocation, k), rho, config.pilot_length,
                                  genie, scene.rx.noise_variance)
                        .gains;
            break;
          case EstimatorKind::MmseSample:
            gains = mmse_estimate(extract_user_signal(scene.rx.y, scene.allocation, k), rho, config.pilot_length,
                                  *sampled[e], scene.rx.noise_variance)
                        .gains;
            break;
          case EstimatorKind::Dce: {
            RngStream user_rng = est_rng.derive(k);
            gains = dce_estimate(scene.rx, scene.allocation, k, est.dce, user_rng).estimate.gains;
            break;
          }
        }
        o.nmse += nmse(scene.truth[k], gains);
        o.estimates.push_back(std::move(gains));
      }
      o.nmse /= static_cast<double>(k_users);
      if (!std::isfinite(o.nmse)) throw Error("non-finite NMSE");
    } catch (const std::exception& ex) {
      o.error = true;
      o.message = ex.what();
      o.estimates.clear();
    }
  }

  if (config.se.enable) {
    out.se.assign(config.estimators.size(), std::vector<double>(config.se.combiners.size(), 0.0));
    out.se_error.assign(config.estimators.size(), std::vector<bool>(config.se.combiners.size(), false));
    for (std::size_t e = 0; e < config.estimators.size(); ++e)
      for (std::size_t c = 0; c < config.se.combiners.size(); ++c) {
        if (out.estimators[e].error) {
          out.se_error[e][c] = true;
          continue;
        }
        SeParams p;
        p.combiner = config.se.combiners[c];
        p.power = config.power;
        p.noise_variance = scene.rx.noise_variance;
        p.pilot_length = config.pilot_length;
        p.coherence = config.channel.symbols;
        p.prefactor = config.se.prefactor;
        const SeResult r = sinr_and_se(scene.truth, out.estimators[e].estimates, p);
        out.se[e][c] = r.sum();
        if (!std::isfinite(out.se[e][c])) out.se_error[e][c] = true;
      }
  }
  for (auto& o : out.estimators) o.estimates.clear();
  return out;
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n_snr = config.snr_db.size();
  const std::size_t n_est = config.estimators.size();

  CovarianceModel genie = genie_covariance(config.channel);
  // sampled[snr][estimator]
  std::vector<std::vector<std::optional<CovarianceModel>>> sampled(n_snr,
                                                                   std::vector<std::optional<CovarianceModel>>(n_est));
  for (std::size_t s = 0; s < n_snr; ++s)
    for (std::size_t e = 0; e < n_est; ++e)
      if (config.estimators[e].kind == EstimatorKind::MmseSample)
        sampled[s][e] = train_sample_covariance(config, config.estimators[e].training,
                                                noise_variance_for_snr(config.snr_db[s], config.power),
                                                RngStream(config.seed, kTrainingStream).derive(s));

  const std::size_t cells = n_snr * config.trials;
  std::vector<CellOutcome> outcomes(cells);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells) return;
      try {
        outcomes[i] = run_cell(config, i / config.trials, i % config.trials, genie, sampled[i / config.trials]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(cells);
        return;
      }
    }
  };
  const std::size_t n_threads = std::min(config.threads, cells);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::optional<double> sir;
  if (config.contamination.kind != ContaminationKind::None) sir = config.contamination.sir_db;

  std::vector<ResultRecord> records;
  const std::size_t n_comb = config.se.enable ? config.se.combiners.size() : 0;
  records.reserve(cells * n_est * (1 + n_comb));
  for (std::size_t e = 0; e < n_est; ++e)
    for (std::size_t s = 0; s < n_snr; ++s)
      for (std::size_t t = 0; t < config.trials; ++t) {
        const auto& o = outcomes[s * config.trials + t].estimators[e];
        ResultRecord r{config.estimators[e].id, config.snr_db[s], sir, t, "nmse", o.nmse, o.error, o.message};
        if (o.error) r.value = std::numeric_limits<double>::quiet_NaN();
        records.push_back(std::move(r));
      }
  for (std::size_t e = 0; e < n_est; ++e)
    for (std::size_t c = 0; c < n_comb; ++c)
      for (std::size_t s = 0; s < n_snr; ++s)
        for (std::size_t t = 0; t < config.trials; ++t) {
          const auto& cell = outcomes[s * config.trials + t];
          ResultRecord r{config.estimators[e].id + "+" + to_string(config.se.combiners[c]),
                         config.snr_db[s],
                         sir,
                         t,
                         "se",
                         cell.se[e][c],
                         cell.se_error[e][c],
                         cell.se_error[e][c] ? cell.estimators[e].message : std::string{}};
          if (r.error) r.value = std::numeric_limits<double>::quiet_NaN();
          records.push_back(std::move(r));
        }
  return records;
}

std::vector<SummaryRow> summarize(std::span<const ResultRecord> records) {
  std::vector<SummaryRow> rows;
  std::map<std::tuple<std::string, double, std::string>, std::size_t> index;
  std::vector<std::vector<double>> values;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.estimator, r.snr_db, r.metric);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({r.estimator, r.snr_db, r.sir_db, r.metric, 0.0, 0.0, 0, 0});
      values.emplace_back();
    }
    SummaryRow& row = rows[it->second];
    if (r.error)
      ++row.errors;
    else
      values[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = values[i];
    rows[i].trials = v.size() + rows[i].errors;
    if (v.empty()) {
      rows[i].mean = rows[i].stddev = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    rows[i].mean = mean;
    rows[i].stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return rows;
}

}  // namespace dce
