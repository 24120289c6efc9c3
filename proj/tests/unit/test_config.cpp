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

#include <gtest/gtest.h>

#include "dce/config.hpp"
#include "dce/errors.hpp"

using namespace dce;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "channel": {"kind": "kronecker", "rho": 0.3},
    "grid": {"m": 4, "n_f": 16, "n": 16},
    "noise": {"snr_db": [0, 10]},
    "estimators": [{"id": "ls", "preset": "ls"}],
    "run": {"trials": 3, "seed": 9}
  })");
}

std::string error_key(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const auto c = parse_config(minimal());
  EXPECT_EQ(c.channel.kind, ChannelKind::Kronecker);
  EXPECT_DOUBLE_EQ(c.channel.rho, 0.3);
  EXPECT_EQ(c.channel.antennas, 4u);
  EXPECT_EQ(c.users, 1u);
  EXPECT_EQ(c.pilot_length, 1u);
  EXPECT_EQ(c.arrangement, PilotArrangement::BlockSymbol);
  EXPECT_EQ(c.contamination.kind, ContaminationKind::None);
  EXPECT_EQ(c.snr_db, (std::vector<double>{0.0, 10.0}));
  EXPECT_EQ(c.trials, 3u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.threads, 1u);
  EXPECT_FALSE(c.se.enable);
  EXPECT_EQ(c.channel.pdp.taps(), 7u);
}

TEST(Config, RoundTripIsStable) {
  for (const auto& name : preset_names()) {
    const auto first = to_json(parse_config(preset_json(name)));
    EXPECT_EQ(to_json(parse_config(first)), first) << name;
  }
  const auto doc = to_json(parse_config(minimal()));
  EXPECT_EQ(to_json(parse_config_text(doc.dump())), doc);
}

TEST(Config, Presets) {
  EXPECT_EQ(preset_names(), (std::vector<std::string>{"fig1", "fig4", "fig5", "fig6", "fig7a", "fig7b", "iid_control"}));
  const auto fig6 = parse_config(preset_json("fig6"));
  ASSERT_EQ(fig6.estimators.size(), 4u);
  EXPECT_EQ(fig6.estimators[3].kind, EstimatorKind::Dce);
  EXPECT_EQ(fig6.estimators[3].dce.width, 16u);
  EXPECT_EQ(fig6.estimators[3].dce.epochs, 1970u);
  EXPECT_EQ(fig6.channel.antennas, 64u);
  const auto fig4 = parse_config(preset_json("fig4"));
  EXPECT_EQ(fig4.channel.antennas, 1u);
  const auto fig7a = parse_config(preset_json("fig7a"));
  EXPECT_EQ(fig7a.contamination.kind, ContaminationKind::RandomREs);
  EXPECT_DOUBLE_EQ(fig7a.contamination.fraction, 0.05);
  EXPECT_DOUBLE_EQ(fig7a.contamination.sir_db, 6.0);
  const auto fig1 = parse_config(preset_json("fig1"));
  EXPECT_TRUE(fig1.se.enable);
  EXPECT_EQ(fig1.se.combiners.size(), 3u);
  EXPECT_EQ(fig1.users, 4u);
  EXPECT_EQ(parse_config(preset_json("iid_control")).channel.kind, ChannelKind::IidPerRe);
  EXPECT_THROW(preset_json("fig9"), ConfigError);
}

TEST(Config, ErrorsNameTheKey) {
  auto doc = minimal();
  doc["channel"].erase("kind");
  EXPECT_EQ(error_key(doc), "channel.kind");

  doc = minimal();
  doc["grid"]["colour"] = 1;
  EXPECT_EQ(error_key(doc), "grid.colour");

  doc = minimal();
  doc["extra"] = true;
  EXPECT_EQ(error_key(doc), "extra");

  doc = minimal();
  doc["grid"]["m"] = "four";
  EXPECT_EQ(error_key(doc), "grid.m");

  doc = minimal();
  doc["grid"]["m"] = -2;
  EXPECT_EQ(error_key(doc), "grid.m");

  doc = minimal();
  doc["noise"]["snr_db"] = json::array();
  EXPECT_EQ(error_key(doc), "noise.snr_db");

  doc = minimal();
  doc["run"]["trials"] = 0;
  EXPECT_EQ(error_key(doc), "run.trials");

  doc = minimal();
  doc["channel"]["kind"] = "rayleigh";
  EXPECT_EQ(error_key(doc), "channel.kind");

  doc = minimal();
  doc["estimators"][0]["preset"] = "m3_k8";
  EXPECT_EQ(error_key(doc), "estimators[0].preset");

  doc = minimal();
  doc["estimators"].push_back({{"id", "ls"}, {"preset", "mmse_genie"}});
  EXPECT_EQ(error_key(doc), "estimators[1].id");

  doc = minimal();
  doc["contamination"] = {{"kind", "random"}, {"fraction", 0.1}};
  EXPECT_EQ(error_key(doc), "contamination.sir_db");

  doc = minimal();
  doc["se"] = {{"enable", true}, {"combiners", {"mr", "rzf"}}};
  EXPECT_EQ(error_key(doc), "se.combiners");

  EXPECT_THROW(parse_config_text("{not json"), ConfigError);
}

TEST(Config, DecoderParams) {
  auto doc = minimal();
  doc["grid"]["n_f"] = 32;
  doc["grid"]["n"] = 32;
  doc["estimators"].push_back(
      {{"id", "d"}, {"params", {{"kind", "dce"}, {"layers", 4}, {"k", 8}, {"epochs", 50}, {"lr", 0.02}}}});
  const auto c = parse_config(doc);
  EXPECT_EQ(c.estimators[1].dce.layers, 4u);
  EXPECT_EQ(c.estimators[1].dce.width, 8u);
  EXPECT_EQ(c.estimators[1].dce.epochs, 50u);
  EXPECT_DOUBLE_EQ(c.estimators[1].dce.lr, 0.02);

  doc["estimators"][1]["params"]["layers"] = 7;
  EXPECT_EQ(error_key(doc), "estimators[1].params.layers");
}

TEST(Config, ContaminationForms) {
  auto doc = minimal();
  doc["grid"]["n_f"] = 64;
  doc["grid"]["n"] = 64;
  doc["contamination"] = {{"kind", "blocks"},
                          {"blocks", {{{"subcarrier", 0}, {"symbol", 8}, {"height", 8}, {"width", 8}}}},
                          {"sir_db", 10}};
  auto c = parse_config(doc);
  ASSERT_EQ(c.contamination.blocks.size(), 1u);
  EXPECT_EQ(c.contamination.blocks[0].symbol, 8u);
  doc["contamination"]["blocks"] = 3;
  c = parse_config(doc);
  EXPECT_EQ(c.contamination.random_blocks, 3u);
  EXPECT_TRUE(c.contamination.blocks.empty());
  doc["contamination"]["blocks"] = {{{"subcarrier", 60}, {"symbol", 0}}};
  EXPECT_EQ(error_key(doc).rfind("contamination", 0), 0u);
}

TEST(Config, PdpForms) {
  auto doc = minimal();
  doc["channel"]["pdp"] = "flat";
  EXPECT_EQ(parse_config(doc).channel.pdp.taps(), 1u);
  doc["channel"]["pdp"] = {{"delays_ns", {0, 100}}, {"powers_db", {0, 0}}};
  const auto c = parse_config(doc);
  ASSERT_EQ(c.channel.pdp.taps(), 2u);
  EXPECT_DOUBLE_EQ(c.channel.pdp.delays[1], 1e-7);
  EXPECT_DOUBLE_EQ(c.channel.pdp.powers[0], 0.5);
  doc["channel"]["pdp"] = {{"delays_ns", {100, 0}}, {"powers_db", {0, 0}}};
  EXPECT_EQ(error_key(doc), "channel.pdp");
}
