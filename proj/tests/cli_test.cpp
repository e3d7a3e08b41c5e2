/*
 Copyright 2026 The lmpc-cert Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lmpc/io.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kWork = fs::temp_directory_path() / "lmpc_cli_test";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LMPC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path write_config(const std::string& name, const std::string& x_S, const std::string& extra = "") {
  fs::create_directories(kWork);
  const fs::path p = kWork / (name + ".json");
  std::ofstream(p) << R"({"system": {"A": [[1, 1], [0, 1]], "B": [[0], [1]]},
    "cost": {"Q": [[1, 0], [0, 1]], "R": [[1]]},
    "constraints": {"x_max": 15, "u_max": 1.5},
    "x_S": )" << x_S << R"(, "N": 4)" << extra << "}";
  return p;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    cfg_ = write_config("small", "[-5, 1]");
    ASSERT_EQ(run_cli("run --config " + cfg_.string() + " --out " + (kWork / "a").string()), 0);
  }
  static fs::path cfg_;
};
fs::path Cli::cfg_;

TEST_F(Cli, RunWritesArtifacts) {
  const fs::path a = kWork / "a";
  for (const char* f : {"fixed_point.dat", "oracle.dat", "overlay.dat", "summary.json", "safe_set.dat",
                        "iteration_000.dat", "iteration_001.dat"})
    EXPECT_TRUE(fs::exists(a / f)) << f;
  const auto s = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(s["verdict"], "optimal");
  EXPECT_TRUE(s["converged_at"].is_number_integer());
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".dat") continue;
    const std::string text = slurp(e.path());
    EXPECT_EQ(text[0], '#') << e.path();
    EXPECT_EQ(std::count(text.begin(), text.end(), '#'), 1) << e.path();
  }
}

TEST_F(Cli, RunIsDeterministic) {
  const fs::path b = kWork / "b";
  ASSERT_EQ(run_cli("run --config " + cfg_.string() + " --out " + b.string()), 0);
  for (const auto& e : fs::directory_iterator(kWork / "a"))
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
}

TEST_F(Cli, CertifyAndExpectations) {
  const std::string base = "certify --config " + cfg_.string() + " --out " + (kWork / "a").string();
  EXPECT_EQ(run_cli(base), 0);
  EXPECT_TRUE(fs::exists(kWork / "a" / "certificate.json"));
  EXPECT_TRUE(fs::exists(kWork / "a" / "multipliers_t0.txt"));
  EXPECT_EQ(run_cli(base + " --expect optimal"), 0);
  EXPECT_EQ(run_cli(base + " --expect suboptimal"), 1);
  const auto c = nlohmann::json::parse(slurp(kWork / "a" / "certificate.json"));
  EXPECT_TRUE(c["trajectory_valid"].get<bool>());
  EXPECT_TRUE(c["licq_certificate"].get<bool>());
}

TEST_F(Cli, TamperedTrajectoryIsACertificateFailure) {
  const fs::path t = kWork / "tampered";
  fs::create_directories(t);
  auto f = lmpc::io::read_trajectory(kWork / "a" / "fixed_point.dat");
  f.states[2][1] += 1e-2;
  lmpc::io::atomic_write(t / "fixed_point.dat",
                         [&](std::ostream& os) { lmpc::io::write_trajectory(os, f.states, f.inputs, f.stage_costs, f.values); });
  EXPECT_EQ(run_cli("certify --config " + cfg_.string() + " --out " + t.string()), 3);
  const auto c = nlohmann::json::parse(slurp(t / "certificate.json"));
  EXPECT_FALSE(c["trajectory_valid"].get<bool>());
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("run"), 2);
  EXPECT_EQ(run_cli("frobnicate --config x"), 2);
  EXPECT_EQ(run_cli("run --config " + (kWork / "missing.json").string()), 2);
  std::ofstream(kWork / "broken.json") << "{\"system\": ";
  EXPECT_EQ(run_cli("run --config " + (kWork / "broken.json").string()), 2);
  EXPECT_EQ(run_cli("certify --config " + cfg_.string() + " --out " + (kWork / "nothing").string()), 2);
  EXPECT_EQ(run_cli("enlarge --config " + cfg_.string() + " --mode sideways"), 2);
  EXPECT_EQ(run_cli("enlarge --config " + cfg_.string() + " --out " + (kWork / "e").string()), 2);  // no block
}

TEST_F(Cli, OriginStartIsTrivial) {
  const fs::path cfg = write_config("origin", "[0, 0]");
  EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + (kWork / "o").string() + " --expect optimal"), 0);
  const auto s = nlohmann::json::parse(slurp(kWork / "o" / "summary.json"));
  EXPECT_EQ(s["cost"].get<double>(), 0.0);
}

TEST_F(Cli, EnlargeWithZeroStepsEmitsBaselineOnly) {
  const fs::path cfg = write_config("m0", "[-5, 1]", R"(, "enlargement": {"M": 0})");
  const fs::path out = kWork / "m0";
  EXPECT_EQ(run_cli("enlarge --config " + cfg.string() + " --out " + out.string()), 0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(out)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"enlarge_report.json", "mpc_roa.dat", "o_inf.dat"}));
}

}  // namespace
