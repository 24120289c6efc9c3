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

#include "dce/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dce/errors.hpp"

namespace dce {

using nlohmann::json;

namespace {

// Object view that remembers which keys were read so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }

  const json& get(const std::string& k) {
    seen_.insert(k);
    if (!j_.contains(k)) throw ConfigError(key(k), "missing required key");
    return j_.at(k);
  }

  double number(const std::string& k) {
    const json& v = get(k);
    if (!v.is_number()) throw ConfigError(key(k), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key(k), "must be finite");
    return d;
  }
  double number(const std::string& k, double fallback) { return has(k) ? number(k) : fallback; }

  std::uint64_t integer(const std::string& k) {
    const json& v = get(k);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) throw ConfigError(key(k), "must be non-negative");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ConfigError(key(k), "must be a non-negative integer");
  }
  std::uint64_t integer(const std::string& k, std::uint64_t fallback) { return has(k) ? integer(k) : fallback; }

  std::string string(const std::string& k) {
    const json& v = get(k);
    if (!v.is_string()) throw ConfigError(key(k), "must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& k, const std::string& fallback) { return has(k) ? string(k) : fallback; }

  bool boolean(const std::string& k, bool fallback) {
    if (!has(k)) return fallback;
    const json& v = get(k);
    if (!v.is_boolean()) throw ConfigError(key(k), "must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& k) {
    const json& v = get(k);
    if (!v.is_array()) throw ConfigError(key(k), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(key(k), "must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto convert(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

PowerDelayProfile parse_pdp(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "epa") return PowerDelayProfile::epa();
    if (name == "flat") return PowerDelayProfile::flat();
    throw ConfigError(path, "unknown profile '" + name + "' (expected epa, flat or an object)");
  }
  Section s(j, path);
  PowerDelayProfile pdp;
  if (s.has("delays_ns")) {
    auto delays = s.numbers("delays_ns");
    for (double& d : delays) d *= 1e-9;
    const auto db = s.numbers("powers_db");
    pdp = convert(path, [&] { return PowerDelayProfile::from_db(delays, db); });
  } else {
    pdp.delays = s.numbers("delays_s");
    pdp.powers = s.numbers("powers");
    convert(path, [&] {
      pdp.validate();
      return 0;
    });
  }
  s.finish();
  return pdp;
}

EstimatorConfig parse_estimator(const json& j, const std::string& path) {
  Section s(j, path);
  EstimatorConfig e;
  e.id = s.string("id");
  if (!s.has("preset") && !s.has("params")) throw ConfigError(s.key("preset"), "either preset or params is required");
  bool have_kind = false;
  if (s.has("preset")) {
    const std::string preset = s.string("preset");
    have_kind = true;
    if (preset == "ls") {
      e.kind = EstimatorKind::Ls;
    } else if (preset == "mmse_genie") {
      e.kind = EstimatorKind::MmseGenie;
    } else if (preset == "mmse_sample") {
      e.kind = EstimatorKind::MmseSample;
    } else {
      const DcePreset* p = nullptr;
      for (const auto& d : dce_presets())
        if (d.name == preset) p = &d;
      if (!p) throw ConfigError(s.key("preset"), "unknown estimator preset '" + preset + "'");
      e.kind = EstimatorKind::Dce;
      e.preset = preset;
      e.dce.width = p->width;
      e.dce.epochs = p->epochs;
    }
  }
  if (s.has("params")) {
    Section p(s.get("params"), s.key("params"));
    if (p.has("kind")) {
      const std::string kind = p.string("kind");
      EstimatorKind k;
      if (kind == "ls")
        k = EstimatorKind::Ls;
      else if (kind == "mmse_genie")
        k = EstimatorKind::MmseGenie;
      else if (kind == "mmse_sample")
        k = EstimatorKind::MmseSample;
      else if (kind == "dce")
        k = EstimatorKind::Dce;
      else
        throw ConfigError(p.key("kind"), "unknown estimator kind '" + kind + "'");
      if (have_kind && k != e.kind) throw ConfigError(p.key("kind"), "conflicts with the preset");
      e.kind = k;
      have_kind = true;
    }
    if (!have_kind) throw ConfigError(p.key("kind"), "missing required key");
    if (e.kind == EstimatorKind::Dce) {
      e.dce.layers = p.integer("layers", e.dce.layers);
      e.dce.width = p.integer("k", e.dce.width);
      e.dce.epochs = p.integer("epochs", e.dce.epochs);
      e.dce.lr = p.number("lr", e.dce.lr);
    }
    if (e.kind == EstimatorKind::MmseSample) e.training = p.integer("training", e.training);
    p.finish();
  }
  s.finish();
  return e;
}

Block parse_block(const json& j, const std::string& path) {
  Section s(j, path);
  Block b{};
  b.subcarrier = s.integer("subcarrier");
  b.symbol = s.integer("symbol");
  b.height = s.integer("height", 8);
  b.width = s.integer("width", 8);
  s.finish();
  return b;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  Section root(doc, "");
  ExperimentConfig c;

  {
    Section ch(root.get("channel"), "channel");
    const std::string kind = ch.string("kind");
    c.channel.kind = convert(ch.key("kind"), [&] { return channel_kind_from_string(kind); });
    c.channel.rho = ch.number("rho", 0.0);
    if (ch.has("pdp")) c.channel.pdp = parse_pdp(ch.get("pdp"), ch.key("pdp"));
    c.channel.subcarrier_spacing = ch.number("subcarrier_spacing_hz", c.channel.subcarrier_spacing);
    ch.finish();
  }
  {
    Section g(root.get("grid"), "grid");
    c.channel.antennas = g.integer("m");
    c.channel.subcarriers = g.integer("n_f", 64);
    c.channel.symbols = g.integer("n", 64);
    c.users = g.integer("k_users", 1);
    c.pilot_length = g.integer("n_p", 1);
    if (g.has("arrangement")) {
      const std::string a = g.string("arrangement");
      c.arrangement = convert(g.key("arrangement"), [&] { return pilot_arrangement_from_string(a); });
    }
    if (g.has("data_fill")) {
      const std::string f = g.string("data_fill");
      c.fill = convert(g.key("data_fill"), [&] { return data_fill_from_string(f); });
    }
    c.power = g.number("power", 1.0);
    g.finish();
  }
  {
    Section n(root.get("noise"), "noise");
    c.snr_db = n.numbers("snr_db");
    n.finish();
  }
  if (root.has("contamination")) {
    Section ct(root.get("contamination"), "contamination");
    const std::string kind = ct.string("kind");
    c.contamination.kind = convert(ct.key("kind"), [&] { return contamination_kind_from_string(kind); });
    if (c.contamination.kind == ContaminationKind::RandomREs) c.contamination.fraction = ct.number("fraction");
    if (c.contamination.kind == ContaminationKind::ContiguousBlocks) {
      const json& b = ct.get("blocks");
      if (b.is_number_integer() || b.is_number_unsigned()) {
        c.contamination.random_blocks = ct.integer("blocks");
      } else if (b.is_array()) {
        for (std::size_t i = 0; i < b.size(); ++i)
          c.contamination.blocks.push_back(parse_block(b[i], ct.key("blocks[" + std::to_string(i) + "]")));
      } else {
        throw ConfigError(ct.key("blocks"), "must be a block count or a list of blocks");
      }
      c.contamination.random_blocks = ct.integer("random_blocks", c.contamination.random_blocks);
      c.contamination.block_size = ct.integer("block_size", c.contamination.block_size);
    }
    if (c.contamination.kind != ContaminationKind::None) c.contamination.sir_db = ct.number("sir_db");
    ct.finish();
  }
  {
    const json& list = root.get("estimators");
    if (!list.is_array()) throw ConfigError("estimators", "must be an array");
    for (std::size_t i = 0; i < list.size(); ++i)
      c.estimators.push_back(parse_estimator(list[i], "estimators[" + std::to_string(i) + "]"));
  }
  if (root.has("run")) {
    Section r(root.get("run"), "run");
    c.trials = r.integer("trials", 1);
    c.seed = r.integer("seed", 0);
    c.threads = r.integer("threads", 1);
    r.finish();
  }
  if (root.has("se")) {
    Section s(root.get("se"), "se");
    c.se.enable = s.boolean("enable", false);
    if (s.has("combiners")) {
      const json& list = s.get("combiners");
      if (!list.is_array()) throw ConfigError(s.key("combiners"), "must be an array");
      for (const auto& x : list) {
        if (!x.is_string()) throw ConfigError(s.key("combiners"), "entries must be strings");
        c.se.combiners.push_back(convert(s.key("combiners"), [&] { return combiner_from_string(x.get<std::string>()); }));
      }
    }
    if (s.has("prefactor")) {
      const std::string p = s.string("prefactor");
      c.se.prefactor = convert(s.key("prefactor"), [&] { return se_prefactor_from_string(p); });
    }
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["channel"] = {{"kind", to_string(c.channel.kind)},
                    {"rho", c.channel.rho},
                    {"pdp", {{"delays_s", c.channel.pdp.delays}, {"powers", c.channel.pdp.powers}}},
                    {"subcarrier_spacing_hz", c.channel.subcarrier_spacing}};
  doc["grid"] = {{"m", c.channel.antennas},
                 {"n_f", c.channel.subcarriers},
                 {"n", c.channel.symbols},
                 {"k_users", c.users},
                 {"n_p", c.pilot_length},
                 {"arrangement", to_string(c.arrangement)},
                 {"data_fill", to_string(c.fill)},
                 {"power", c.power}};
  doc["noise"] = {{"snr_db", c.snr_db}};
  json ct = {{"kind", to_string(c.contamination.kind)}};
  if (c.contamination.kind == ContaminationKind::RandomREs) ct["fraction"] = c.contamination.fraction;
  if (c.contamination.kind == ContaminationKind::ContiguousBlocks) {
    json blocks = json::array();
    for (const auto& b : c.contamination.blocks)
      blocks.push_back({{"subcarrier", b.subcarrier}, {"symbol", b.symbol}, {"height", b.height}, {"width", b.width}});
    ct["blocks"] = blocks;
    ct["random_blocks"] = c.contamination.random_blocks;
    ct["block_size"] = c.contamination.block_size;
  }
  if (c.contamination.kind != ContaminationKind::None) ct["sir_db"] = c.contamination.sir_db;
  doc["contamination"] = ct;
  json ests = json::array();
  for (const auto& e : c.estimators) {
    json params = {{"kind", to_string(e.kind)}};
    if (e.kind == EstimatorKind::Dce) {
      params["layers"] = e.dce.layers;
      params["k"] = e.dce.width;
      params["epochs"] = e.dce.epochs;
      params["lr"] = e.dce.lr;
    }
    if (e.kind == EstimatorKind::MmseSample) params["training"] = e.training;
    json entry = {{"id", e.id}, {"params", params}};
    if (!e.preset.empty()) entry["preset"] = e.preset;
    ests.push_back(entry);
  }
  doc["estimators"] = ests;
  doc["run"] = {{"trials", c.trials}, {"seed", c.seed}, {"threads", c.threads}};
  json combs = json::array();
  for (auto cb : c.se.combiners) combs.push_back(to_string(cb));
  doc["se"] = {{"enable", c.se.enable}, {"combiners", combs}, {"prefactor", to_string(c.se.prefactor)}};
  return doc;
}

std::vector<std::string> preset_names() { return {"fig1", "fig4", "fig5", "fig6", "fig7a", "fig7b", "iid_control"}; }

json preset_json(const std::string& name) {
  const json snr_sweep = {0, 5, 10, 15, 20};
  const json baselines = json::array({{{"id", "ls"}, {"preset", "ls"}},
                                      {{"id", "mmse_sample"}, {"preset", "mmse_sample"}},
                                      {{"id", "mmse_genie"}, {"preset", "mmse_genie"}}});
  auto with = [&](json extra) {
    json e = baselines;
    for (auto& x : extra) e.push_back(x);
    return e;
  };
  auto grid = [](int m, int np) {
    return json{{"m", m}, {"n_f", 64}, {"n", 64}, {"k_users", 1}, {"n_p", np}, {"arrangement", "block"}};
  };
  const json epa = {{"kind", "tdl"}, {"pdp", "epa"}};

  if (name == "fig1") {
    return {{"channel", {{"kind", "kronecker"}, {"rho", 0.5}, {"pdp", "epa"}}},
            {"grid", {{"m", 64}, {"n_f", 64}, {"n", 64}, {"k_users", 4}, {"n_p", 1}, {"arrangement", "block"}}},
            {"noise", {{"snr_db", {-10}}}},
            {"estimators", json::array({{{"id", "ls"}, {"preset", "ls"}}, {{"id", "mmse"}, {"preset", "mmse_genie"}}})},
            {"run", {{"trials", 200}, {"seed", 1}, {"threads", 1}}},
            {"se", {{"enable", true}, {"combiners", {"mr", "zf", "mmse"}}, {"prefactor", "as_paper"}}}};
  }
  if (name == "fig4") {
    return {{"channel", epa},
            {"grid", grid(1, 1)},
            {"noise", {{"snr_db", snr_sweep}}},
            {"estimators", with({{{"id", "dce_k8"}, {"preset", "m1_k8"}},
                                 {{"id", "dce_k16"}, {"preset", "m1_k16"}},
                                 {{"id", "dce_k32"}, {"preset", "m1_k32"}},
                                 {{"id", "dce_k64"}, {"preset", "m1_k64"}}})},
            {"run", {{"trials", 20}, {"seed", 4}, {"threads", 1}}}};
  }
  if (name == "fig5") {
    return {{"channel", epa},
            {"grid", grid(64, 4)},
            {"noise", {{"snr_db", snr_sweep}}},
            {"estimators", json::array({{{"id", "ls"}, {"preset", "ls"}}, {{"id", "dce_k16"}, {"preset", "m64_k16"}}})},
            {"run", {{"trials", 20}, {"seed", 5}, {"threads", 1}}}};
  }
  if (name == "fig6") {
    return {{"channel", epa},
            {"grid", grid(64, 1)},
            {"noise", {{"snr_db", snr_sweep}}},
            {"estimators", with({{{"id", "dce_k16"}, {"preset", "m64_k16"}}})},
            {"run", {{"trials", 20}, {"seed", 6}, {"threads", 1}}}};
  }
  if (name == "fig7a") {
    return {{"channel", epa},
            {"grid", grid(64, 1)},
            {"noise", {{"snr_db", snr_sweep}}},
            {"contamination", {{"kind", "random"}, {"fraction", 0.05}, {"sir_db", 6}}},
            {"estimators", with({{{"id", "dce_k16"}, {"preset", "m64_k16"}}})},
            {"run", {{"trials", 20}, {"seed", 7}, {"threads", 1}}}};
  }
  if (name == "fig7b") {
    return {{"channel", epa},
            {"grid", grid(64, 1)},
            {"noise", {{"snr_db", snr_sweep}}},
            {"contamination", {{"kind", "blocks"}, {"blocks", 4}, {"block_size", 8}, {"sir_db", 10}}},
            {"estimators", with({{{"id", "dce_k16"}, {"preset", "m64_k16"}}})},
            {"run", {{"trials", 20}, {"seed", 8}, {"threads", 1}}}};
  }
  if (name == "iid_control") {
    return {{"channel", {{"kind", "iid"}}},
            {"grid", grid(64, 1)},
            {"noise", {{"snr_db", {10}}}},
            {"estimators", json::array({{{"id", "ls"}, {"preset", "ls"}}, {{"id", "dce_k16"}, {"preset", "m64_k16"}}})},
            {"run", {{"trials", 20}, {"seed", 9}, {"threads", 1}}}};
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

}  // namespace dce
