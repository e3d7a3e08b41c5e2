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
#ifndef LMPC_TOOLS_CONFIG_HPP
#define LMPC_TOOLS_CONFIG_HPP

// JSON run configuration. Matrices are nested arrays, row-major. Every
// field except system, cost, constraints and x_S has a default; unknown
// keys are rejected.
//
// {
//   "system":      {"A": [[..]], "B": [[..]]},
//   "cost":        {"Q": [[..]], "R": [[..]]},
//   "constraints": {"x_max": 15, "u_max": 2}            (box)
//              or  {"F_x": [[..]], "b_x": [..], "F_u": [[..]], "b_u": [..]},
//   "x_S": [..],
//   "N": 3,
//   "T_max": 300, "max_iterations": 50, "T_oracle": 300,
//   "tolerances": {"fixedpoint_tol": 1e-6, "cost_tol_rel": 1e-14, "trunc_tol": 1e-8,
//                  "rank_tol": 1e-7, "active_tol": 1e-6, "state_tol": 1e-3,
//                  "cost_rel_tol": 1e-4, "shift_tol": 1e-5},
//   "certify":     {"table_times": [0, 1], "shift_times": [0], "suffix_t": <last LICQ failure or 0>},
//   "enlargement": {"mode": "exact", "M": 5, "D": [[1, -0.3], ..], "per_vertex_update": true},
//   "expect": "optimal" | "suboptimal",
//   "out": "out"
// }

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmpc/controller.hpp"
#include "lmpc/enlarge.hpp"

namespace lmpc::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double fixedpoint_tol = 1e-6;
  double cost_tol_rel = 1e-14;
  double trunc_tol = kTruncationTol;
  double rank_tol = 1e-7;
  double active_tol = 1e-6;
  double state_tol = 1e-3;     // oracle state deviation
  double cost_rel_tol = 1e-4;  // oracle relative cost gap
  double shift_tol = 1e-5;
};

struct CertifyOptions {
  std::vector<std::size_t> table_times{0, 1};
  std::vector<std::size_t> shift_times{0};
  std::optional<std::size_t> suffix_t;
};

struct EnlargeOptions {
  RoaMode mode = RoaMode::exact;
  int M = 5;
  std::vector<Vec> D;
  bool per_vertex_update = true;
};

struct RunConfig {
  ControlProblem problem;
  Vec x_S;
  int N = 3;
  int T_max = 300;
  int max_iterations = 50;
  int T_oracle = 300;
  Tolerances tol;
  CertifyOptions certify;
  std::optional<EnlargeOptions> enlarge;
  std::optional<std::string> expect;
  std::filesystem::path out = "out";

  [[nodiscard]] LmpcConfig lmpc() const {
    LmpcConfig c;
    c.horizon = N;
    c.trunc_tol = tol.trunc_tol;
    c.fixedpoint_tol = tol.fixedpoint_tol;
    c.cost_tol_rel = tol.cost_tol_rel;
    c.max_steps = T_max;
    c.max_iterations = max_iterations;
    return c;
  }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

inline const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& where, int lo) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  const auto v = j.get<long long>();
  if (v < lo || v > 1000000) throw ConfigError(where + ": out of range");
  return static_cast<int>(v);
}

inline Vec vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

inline Mat matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw ConfigError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Mat M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(where + ": rows have different lengths");
    for (std::size_t c = 0; c < cols; ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], where);
  }
  return M;
}

inline std::vector<std::size_t> times(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<std::size_t> out;
  for (const auto& e : j) out.push_back(static_cast<std::size_t>(integer(e, where, 0)));
  return out;
}

}  // namespace detail

inline RoaMode parse_mode(const std::string& s) {
  if (s == "exact") return RoaMode::exact;
  if (s == "directions" || s == "directional") return RoaMode::directional;
  throw ConfigError("mode must be 'exact' or 'directions', got '" + s + "'");
}

inline std::string check_expect(const std::string& s) {
  if (s != "optimal" && s != "suboptimal") throw ConfigError("expect must be 'optimal' or 'suboptimal', got '" + s + "'");
  return s;
}

inline RunConfig parse_config(const nlohmann::json& j) {
  using namespace detail;
  check_keys(j, "config", {"system", "cost", "constraints", "x_S", "N", "T_max", "max_iterations", "T_oracle",
                           "tolerances", "certify", "enlargement", "expect", "out"});
  RunConfig c;
  try {
    const json& sj = need(j, "system", "config");
    check_keys(sj, "system", {"A", "B"});
    LinearSystem sys(matrix(need(sj, "A", "system"), "system.A"), matrix(need(sj, "B", "system"), "system.B"));

    const json& cj = need(j, "cost", "config");
    check_keys(cj, "cost", {"Q", "R"});
    StageCost cost(matrix(need(cj, "Q", "cost"), "cost.Q"), matrix(need(cj, "R", "cost"), "cost.R"));

    const json& kj = need(j, "constraints", "config");
    check_keys(kj, "constraints", {"x_max", "u_max", "F_x", "b_x", "F_u", "b_u"});
    ConstraintSet cons;
    const bool box = kj.contains("x_max") || kj.contains("u_max");
    const bool general = kj.contains("F_x") || kj.contains("b_x") || kj.contains("F_u") || kj.contains("b_u");
    if (box == general) throw ConfigError("constraints: give either x_max/u_max or F_x/b_x/F_u/b_u");
    if (box) {
      cons = ConstraintSet::box(sys.n(), number(need(kj, "x_max", "constraints"), "constraints.x_max"), sys.d(),
                                number(need(kj, "u_max", "constraints"), "constraints.u_max"));
    } else {
      cons = ConstraintSet(matrix(need(kj, "F_x", "constraints"), "constraints.F_x"),
                           vector(need(kj, "b_x", "constraints"), "constraints.b_x"),
                           matrix(need(kj, "F_u", "constraints"), "constraints.F_u"),
                           vector(need(kj, "b_u", "constraints"), "constraints.b_u"));
    }
    c.problem = ControlProblem(std::move(sys), std::move(cost), std::move(cons));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  c.x_S = vector(need(j, "x_S", "config"), "x_S");
  if (c.x_S.size() != c.problem.n()) throw ConfigError("x_S: dimension does not match A");
  if (j.contains("N")) c.N = integer(j["N"], "N", 1);
  if (j.contains("T_max")) c.T_max = integer(j["T_max"], "T_max", 1);
  if (j.contains("max_iterations")) c.max_iterations = integer(j["max_iterations"], "max_iterations", 1);
  if (j.contains("T_oracle")) c.T_oracle = integer(j["T_oracle"], "T_oracle", 1);

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    check_keys(t, "tolerances", {"fixedpoint_tol", "cost_tol_rel", "trunc_tol", "rank_tol", "active_tol", "state_tol",
                                 "cost_rel_tol", "shift_tol"});
    auto opt = [&](const char* k, double& dst) {
      if (t.contains(k)) {
        dst = number(t[k], std::string("tolerances.") + k);
        if (!(dst > 0.0)) throw ConfigError(std::string("tolerances.") + k + ": must be positive");
      }
    };
    opt("fixedpoint_tol", c.tol.fixedpoint_tol);
    opt("cost_tol_rel", c.tol.cost_tol_rel);
    opt("trunc_tol", c.tol.trunc_tol);
    opt("rank_tol", c.tol.rank_tol);
    opt("active_tol", c.tol.active_tol);
    opt("state_tol", c.tol.state_tol);
    opt("cost_rel_tol", c.tol.cost_rel_tol);
    opt("shift_tol", c.tol.shift_tol);
  }

  if (j.contains("certify")) {
    const json& t = j["certify"];
    check_keys(t, "certify", {"table_times", "shift_times", "suffix_t"});
    if (t.contains("table_times")) c.certify.table_times = times(t["table_times"], "certify.table_times");
    if (t.contains("shift_times")) c.certify.shift_times = times(t["shift_times"], "certify.shift_times");
    if (t.contains("suffix_t")) c.certify.suffix_t = static_cast<std::size_t>(integer(t["suffix_t"], "certify.suffix_t", 0));
  }

  if (j.contains("enlargement")) {
    const json& t = j["enlargement"];
    check_keys(t, "enlargement", {"mode", "M", "D", "per_vertex_update"});
    EnlargeOptions e;
    if (t.contains("mode")) {
      if (!t["mode"].is_string()) throw ConfigError("enlargement.mode: expected a string");
      e.mode = parse_mode(t["mode"].get<std::string>());
    }
    if (t.contains("M")) e.M = integer(t["M"], "enlargement.M", 0);
    if (t.contains("D")) {
      const Mat D = matrix(t["D"], "enlargement.D");
      if (D.cols() != c.problem.n()) throw ConfigError("enlargement.D: each direction needs n entries");
      for (Eigen::Index i = 0; i < D.rows(); ++i) {
        if (D.row(i).norm() == 0.0) throw ConfigError("enlargement.D: zero direction");
        e.D.push_back(D.row(i).transpose());
      }
    }
    if (t.contains("per_vertex_update")) {
      if (!t["per_vertex_update"].is_boolean()) throw ConfigError("enlargement.per_vertex_update: expected a boolean");
      e.per_vertex_update = t["per_vertex_update"].get<bool>();
    }
    c.enlarge = e;
  }

  if (j.contains("expect")) {
    if (!j["expect"].is_string()) throw ConfigError("expect: expected a string");
    c.expect = check_expect(j["expect"].get<std::string>());
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw ConfigError("out: expected a string");
    c.out = j["out"].get<std::string>();
  }

  try {
    c.lmpc().validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace lmpc::cli

#endif  // LMPC_TOOLS_CONFIG_HPP
