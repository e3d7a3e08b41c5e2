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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace lmpc::cli;
  CLI::App app{"Learning MPC with LICQ certification"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode, expect;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config 'out')");
  };
  CLI::App* run = app.add_subcommand("run", "iterate LMPC to a fixed point and compare with the long-horizon oracle");
  add_common(run);
  run->add_option("--expect", expect, "optimal|suboptimal")->check(CLI::IsMember({"optimal", "suboptimal"}));
  CLI::App* certify = app.add_subcommand("certify", "LICQ, multiplier tables, shift and stitch checks on a fixed point");
  add_common(certify);
  certify->add_option("--expect", expect, "optimal|suboptimal")->check(CLI::IsMember({"optimal", "suboptimal"}));
  CLI::App* enlarge = app.add_subcommand("enlarge", "region-of-attraction enlargement from CS = {0}");
  add_common(enlarge);
  enlarge->add_option("--mode", mode, "exact|directions")->check(CLI::IsMember({"exact", "directions"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!out_dir.empty()) cfg.out = out_dir;
  const auto opt_expect = expect.empty() ? std::nullopt : std::optional<std::string>(expect);

  try {
    if (run->parsed()) return cmd_run(cfg, opt_expect);
    if (certify->parsed()) return cmd_certify(cfg, opt_expect);
    return cmd_enlarge(cfg, mode.empty() ? std::nullopt : std::optional<lmpc::RoaMode>(parse_mode(mode)));
  } catch (const lmpc::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  }
}
