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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "dce/cli.hpp"
#include "dce/config.hpp"

using namespace dce;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("dce_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

Run run_cli(const std::string& args, const TempDir& dir, const std::string& env = "") {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = env + " " + DCE_CLI_PATH + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

void write_config(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

const char* kSmall = R"({
  "channel": {"kind": "kronecker", "rho": 0.5},
  "grid": {"m": 2, "n_f": 16, "n": 16},
  "noise": {"snr_db": [0, 10]},
  "estimators": [{"id": "ls", "preset": "ls"}, {"id": "genie", "preset": "mmse_genie"},
                 {"id": "d", "params": {"kind": "dce", "layers": 4, "k": 4, "epochs": 10}}],
  "run": {"trials": 3, "seed": 5}
})";

}  // namespace

TEST(Cli, TablesPrintWeightCounts) {
  TempDir dir;
  auto r = run_cli("tables --table 1", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "k,epochs,weights,expected\n8,2000,496,496\n16,1300,1760,1760\n32,900,6592,6592\n64,250,25472,25472\n");
  r = run_cli("tables --table 2", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("16,1970,3776,3776"), std::string::npos);
  EXPECT_EQ(run_cli("tables --table 3", dir).code, 1);
  EXPECT_EQ(run_cli("tables", dir).code, 1);
}

TEST(Cli, Gradcheck) {
  TempDir dir;
  auto r = run_cli("gradcheck", dir);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("max relative error"), std::string::npos);
  r = run_cli("gradcheck --tolerance 1e-300", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("parameter"), std::string::npos);
  EXPECT_EQ(run_cli("gradcheck --arch huge", dir).code, 1);
}

TEST(Cli, SweepWritesOutputsAndReplaysBitIdentically) {
  TempDir dir;
  write_config(dir / "c.json", kSmall);
  auto r = run_cli("sweep " + (dir / "c.json").string() + " --out " + (dir / "a").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string results = slurp(dir / "a" / "results.csv");
  EXPECT_EQ(results.substr(0, results.find('\n')), "estimator,snr_db,sir_db,trial,metric,value");
  EXPECT_EQ(lines(results), 1u + 3 * 2 * 3);
  EXPECT_NE(results.find("\nls,0,,0,nmse,"), std::string::npos);
  const std::string summary = slurp(dir / "a" / "summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "estimator,snr_db,sir_db,metric,mean,std,trials,errors");
  EXPECT_EQ(lines(summary), 1u + 3 * 2);

  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest.at("seed"), 5);
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_TRUE(manifest.contains("started"));

  r = run_cli("sweep " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "b").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "b" / "results.csv"), results);

  r = run_cli("sweep " + (dir / "c.json").string() + " --threads 3 --out " + (dir / "c").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "c" / "results.csv"), results);

  r = run_cli("sweep " + (dir / "c.json").string() + " --out " + (dir / "d").string(), dir, "DCE_THREADS=4");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "d" / "results.csv"), results);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "d" / "manifest.json"))["config"]["run"]["threads"], 4);

  r = run_cli("sweep " + (dir / "c.json").string() + " --seed 6 --out " + (dir / "e").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "e" / "results.csv"), results);
}

TEST(Cli, InvalidConfigExitsOneNamingKey) {
  TempDir dir;
  write_config(dir / "bad.json", R"({"channel": {"rho": 0.5}, "grid": {"m": 2}, "noise": {"snr_db": [0]},
    "estimators": [{"id": "ls", "preset": "ls"}], "run": {"trials": 1}})");
  auto r = run_cli("sweep " + (dir / "bad.json").string() + " --out " + (dir / "o").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("channel.kind"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "o" / "results.csv"));

  write_config(dir / "broken.json", "{");
  EXPECT_EQ(run_cli("sweep " + (dir / "broken.json").string(), dir).code, 1);
  EXPECT_EQ(run_cli("sweep " + (dir / "missing.json").string(), dir).code, 1);
  EXPECT_EQ(run_cli("sweep --preset nope", dir).code, 1);
  EXPECT_EQ(run_cli("sweep --preset fig6 --threads 0", dir).code, 1);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 1);
}

TEST(Cli, RuntimeFailureExitsTwo) {
  TempDir dir;
  write_config(dir / "c.json", kSmall);
  write_config(dir / "blocker", "a file where the output directory should go");
  const auto r = run_cli("sweep " + (dir / "c.json").string() + " --out " + (dir / "blocker").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, DumpConfigRoundTrips) {
  TempDir dir;
  const auto r = run_cli("sweep --preset fig7b --dump-config", dir);
  ASSERT_EQ(r.code, 0);
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc, to_json(parse_config(preset_json("fig7b"))));
}

TEST(Cli, FitOneMatchesSweep) {
  TempDir dir;
  write_config(dir / "c.json", kSmall);
  auto r = run_cli("fit-one " + (dir / "c.json").string() + " --snr 10 --trial 2", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out), 1u + 10 + 2);
  EXPECT_EQ(r.out.rfind("epoch,loss\n0,", 0), 0u);
  const auto at = r.out.find("final_nmse,");
  ASSERT_NE(at, std::string::npos);
  const std::string nmse = r.out.substr(at + 11, r.out.find('\n', at) - at - 11);

  ASSERT_EQ(run_cli("sweep " + (dir / "c.json").string() + " --out " + (dir / "s").string(), dir).code, 0);
  EXPECT_NE(slurp(dir / "s" / "results.csv").find("d,10,,2,nmse," + nmse + "\n"), std::string::npos);

  r = run_cli("fit-one " + (dir / "c.json").string() + " --dump-loss " + (dir / "loss.csv").string(), dir);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines(slurp(dir / "loss.csv")), 11u);
  EXPECT_EQ(lines(r.out), 2u);
  EXPECT_EQ(run_cli("fit-one " + (dir / "c.json").string() + " --estimator ls", dir).code, 1);
}

TEST(Cli, InProcessFormatting) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(10.0), "10");
  EXPECT_EQ(format_double(-2.5e-7), "-2.5e-07");
  std::vector<ResultRecord> recs{{"ls", 10.0, 6.0, 3, "nmse", 0.25}};
  std::ostringstream out;
  write_results_csv(recs, out);
  EXPECT_EQ(out.str(), "estimator,snr_db,sir_db,trial,metric,value\nls,10,6,3,nmse,0.25\n");
}
