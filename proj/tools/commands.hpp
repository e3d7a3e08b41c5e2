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
#ifndef LMPC_TOOLS_COMMANDS_HPP
#define LMPC_TOOLS_COMMANDS_HPP

// run / certify / enlarge. Exit codes: 0 ok, 1 verdict differs from the
// expectation, 2 usage/config/missing input, 3 invariant violation or
// failed numerical procedure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "lmpc/certify.hpp"
#include "lmpc/controller.hpp"
#include "lmpc/enlarge.hpp"
#include "lmpc/io.hpp"
#include "lmpc/polytope.hpp"

namespace lmpc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvariant = 3;

inline constexpr double kChainSlackTol = 1e-6;

using ojson = nlohmann::ordered_json;

namespace detail {

inline ojson vec_json(const Vec& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline ojson finite(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson polygon_json(const std::vector<Vec>& verts) {
  ojson a = ojson::array();
  for (const auto& v : verts) a.push_back(vec_json(v));
  return a;
}

inline void write_json(const std::filesystem::path& p, const ojson& j) { io::atomic_write(p, j.dump(2) + "\n"); }

inline std::string numbered(const std::string& stem, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d.dat", stem.c_str(), i);
  return buf;
}

/// Writes a trajectory file and re-reads it through the validator.
inline void emit_trajectory(const ControlProblem& prob, const std::filesystem::path& p, const Trajectory& xs,
                            const Trajectory& us, const std::vector<double>& stage, const std::vector<double>& values,
                            double dyn_tol = 1e-9) {
  io::atomic_write(p, [&](std::ostream& os) { io::write_trajectory(os, xs, us, stage, values); });
  const io::TrajectoryFile f = io::read_trajectory(p);
  validate_trajectory(prob, f.states, f.inputs, dyn_tol);
}

inline std::vector<double> cost_to_go(const std::vector<double>& stage) {
  std::vector<double> v(stage.size() + 1, 0.0);
  for (std::size_t t = stage.size(); t-- > 0;) v[t] = v[t + 1] + stage[t];
  return v;
}

inline std::vector<double> stage_costs(const ControlProblem& prob, const Trajectory& xs, const Trajectory& us) {
  std::vector<double> h;
  for (std::size_t t = 0; t < us.size(); ++t) h.push_back(stage_cost(prob.cost, xs[t], us[t]));
  return h;
}

/// Rows: t, then x/u of each trajectory (zero past its end).
inline void write_overlay(std::ostream& os, const std::vector<std::pair<std::string, const FixedPoint*>>& cols,
                          std::size_t rows) {
  os << "# t";
  for (const auto& [name, fp] : cols) {
    for (Eigen::Index i = 0; i < fp->n(); ++i) os << " x" << i + 1 << '_' << name;
    for (Eigen::Index i = 0; i < fp->d(); ++i) os << (fp->d() == 1 ? " u" : " u" + std::to_string(i + 1)) << '_' << name;
  }
  os << '\n';
  for (std::size_t t = 0; t < rows; ++t) {
    os << t;
    for (const auto& [name, fp] : cols) {
      const Vec x = fp->x(t), u = fp->u(t);
      for (Eigen::Index i = 0; i < x.size(); ++i) os << ' ' << io::num(x[i]);
      for (Eigen::Index i = 0; i < u.size(); ++i) os << ' ' << io::num(u[i]);
    }
    os << '\n';
  }
}

inline int expectation_exit(const std::optional<std::string>& expect, const std::string& verdict) {
  if (!expect || *expect == verdict) return kExitOk;
  std::cerr << "verdict '" << verdict << "' differs from expected '" << *expect << "'\n";
  return kExitMismatch;
}

inline ojson licq_json(const LicqReport& r) {
  ojson j;
  j["horizon"] = r.horizon;
  j["pass"] = r.pass;
  ojson f = ojson::array();
  for (auto t : r.failing_times()) f.push_back(t);
  j["failing_times"] = f;
  ojson es = ojson::array();
  for (const auto& e : r.entries) {
    ojson a = ojson::array();
    for (auto i : e.active) a.push_back(i);
    es.push_back({{"t", e.t}, {"rows", e.rows}, {"cols", e.cols}, {"rank", e.rank}, {"sigma_ratio", e.sigma_ratio},
                  {"active", a}, {"pass", e.pass}});
  }
  j["entries"] = es;
  return j;
}

}  // namespace detail

inline int cmd_run(const RunConfig& cfg, const std::optional<std::string>& expect_flag = std::nullopt) {
  namespace fs = std::filesystem;
  using namespace detail;
  const auto& prob = cfg.problem;
  const LmpcConfig lc = cfg.lmpc();
  fs::create_directories(cfg.out);
  const auto expect = expect_flag ? expect_flag : cfg.expect;

  ojson summary;
  summary["N"] = cfg.N;
  summary["x_S"] = vec_json(cfg.x_S);
  summary["fixedpoint_tol"] = lc.fixedpoint_tol;
  summary["cost_tol_rel"] = lc.cost_tol_rel;

  if (cfg.x_S.lpNorm<Eigen::Infinity>() == 0.0) {
    // already at the origin: the zero trajectory is the fixed point
    const Trajectory xs{cfg.x_S}, us{};
    emit_trajectory(prob, cfg.out / numbered("iteration", 0), xs, us, {}, {0.0});
    emit_trajectory(prob, cfg.out / "fixed_point.dat", xs, us, {}, {0.0});
    emit_trajectory(prob, cfg.out / "oracle.dat", xs, us, {}, {0.0});
    summary["iterations"] = ojson::array();
    summary["converged_at"] = 0;
    summary["cost"] = 0.0;
    summary["oracle"] = {{"cost", 0.0}, {"state_deviation", 0.0}, {"rel_gap", 0.0}};
    summary["licq"] = {{"pass", true}, {"failing_times", ojson::array()}};
    summary["verdict"] = "optimal";
    write_json(cfg.out / "summary.json", summary);
    return expectation_exit(expect, "optimal");
  }

  IterationHistory h;
  try {
    h = run_until_fixed_point(prob, cfg.x_S, lc, generate_initial_trajectory(prob, cfg.x_S, cfg.T_max));
  } catch (const Error& e) {
    std::cerr << "run: " << e.what() << '\n';
    summary["error"] = e.what();
    write_json(cfg.out / "summary.json", summary);
    return kExitInvariant;
  }

  ojson its = ojson::array();
  bool invariants_ok = true;
  for (std::size_t j = 0; j < h.iterations.size(); ++j) {
    const auto& r = h.iterations[j];
    emit_trajectory(prob, cfg.out / numbered("iteration", static_cast<int>(j)), r.states, r.inputs, r.stage_costs,
                    r.values.empty() ? cost_to_go(r.stage_costs) : r.values,
                    // the stored initial trajectory is closed at the origin from inside the truncation ball
                    j == 0 ? std::max(1e-9, cfg.tol.trunc_tol) : 1e-9);
    ojson it{{"j", j}, {"cost", r.cost}, {"steps", r.inputs.size()}};
    if (j > 0) {
      const auto br = h.branches[j - 1];
      it["branch"] = to_string(br);
      it["deviation"] = h.deviations[j - 1];
      it["chain_slack"] = finite(r.chain_slack);
      it["decrease_slack"] = finite(r.decrease_slack);
      it["prediction_error"] = r.prediction_error;
      if (br == DichotomyBranch::violated || r.chain_slack < -kChainSlackTol) invariants_ok = false;
    }
    its.push_back(it);
  }
  summary["iterations"] = its;
  summary["cost_tol"] = h.cost_tol;
  summary["converged_at"] = h.converged_at ? ojson(*h.converged_at) : ojson(nullptr);
  io::atomic_write(cfg.out / "safe_set.dat", [&](std::ostream& os) { write_safe_set(os, h.safe_set); });

  if (!invariants_ok) {
    std::cerr << "run: monotonicity dichotomy or cost chain violated\n";
    summary["error"] = "invariant violated";
    write_json(cfg.out / "summary.json", summary);
    return kExitInvariant;
  }
  if (!h.converged_at) {
    std::cerr << "run: no fixed point within " << cfg.max_iterations << " iterations\n";
    summary["error"] = "no fixed point within max_iterations";
    write_json(cfg.out / "summary.json", summary);
    return kExitInvariant;
  }

  const auto& last = h.iterations.back();
  const FixedPoint fp{last.states, last.inputs};
  emit_trajectory(prob, cfg.out / "fixed_point.dat", last.states, last.inputs, last.stage_costs, last.values);
  summary["cost"] = last.cost;

  try {
    const OracleSolution orc = solve_long_horizon(prob, cfg.x_S, cfg.T_oracle);
    const auto oh = stage_costs(prob, orc.states, orc.inputs);
    emit_trajectory(prob, cfg.out / "oracle.dat", orc.states, orc.inputs, oh, cost_to_go(oh), 1e-7);
    const OptimalityVerdict v =
        verify_optimality(prob, fp, orc, cfg.tol.state_tol, cfg.tol.cost_rel_tol, 0, 0);
    summary["oracle"] = {{"T", cfg.T_oracle},
                         {"cost", orc.cost},
                         {"state_deviation", v.state_deviation},
                         {"gap", v.gap},
                         {"rel_gap", v.rel_gap}};

    const FixedPoint init{h.iterations.front().states, h.iterations.front().inputs};
    const FixedPoint oracle_fp{orc.states, orc.inputs};
    const std::size_t rows = std::max(init.states.size(), fp.states.size());
    io::atomic_write(cfg.out / "overlay.dat", [&](std::ostream& os) {
      write_overlay(os, {{"initial", &init}, {"lmpc", &fp}, {"oracle", &oracle_fp}}, rows);
    });

    if (cfg.N >= 2) {
      const LicqReport lr = check_licq(prob, fp, cfg.N, 1, std::nullopt, cfg.tol.rank_tol, cfg.tol.active_tol,
                                       cfg.tol.trunc_tol);
      summary["licq"] = licq_json(lr);
    }
    const std::string verdict = v.optimal ? "optimal" : "suboptimal";
    summary["verdict"] = verdict;
    write_json(cfg.out / "summary.json", summary);
    std::cerr << "run: converged at j=" << *h.converged_at << ", verdict " << verdict << '\n';
    return expectation_exit(expect, verdict);
  } catch (const Error& e) {
    std::cerr << "run: " << e.what() << '\n';
    summary["error"] = e.what();
    write_json(cfg.out / "summary.json", summary);
    return kExitInvariant;
  }
}

inline int cmd_certify(const RunConfig& cfg, const std::optional<std::string>& expect_flag = std::nullopt) {
  namespace fs = std::filesystem;
  using namespace detail;
  const auto& prob = cfg.problem;
  const auto expect = expect_flag ? expect_flag : cfg.expect;
  const fs::path src = cfg.out / "fixed_point.dat";
  if (!fs::exists(src)) {
    std::cerr << "certify: missing " << src.string() << " (run first)\n";
    return kExitUsage;
  }
  io::TrajectoryFile f;
  try {
    f = io::read_trajectory(src);
  } catch (const std::exception& e) {
    std::cerr << "certify: " << e.what() << '\n';
    return kExitUsage;
  }

  ojson rep;
  rep["N"] = cfg.N;
  try {
    if (f.states.front().size() != prob.n() || (!f.inputs.empty() && f.inputs.front().size() != prob.d()))
      throw InvariantViolation("trajectory dimensions do not match the configured system");
    if ((f.states.front() - cfg.x_S).lpNorm<Eigen::Infinity>() != 0.0)
      throw InvariantViolation("trajectory does not start at x_S");
    validate_trajectory(prob, f.states, f.inputs);
  } catch (const Error& e) {
    std::cerr << "certify: certificate failure: " << e.what() << '\n';
    rep["trajectory_valid"] = false;
    rep["diagnostic"] = e.what();
    rep["verdict"] = "invalid";
    write_json(cfg.out / "certificate.json", rep);
    return kExitInvariant;
  }
  rep["trajectory_valid"] = true;
  const FixedPoint fp{f.states, f.inputs};
  const auto NN = static_cast<std::size_t>(cfg.N);

  try {
    LicqReport lr;
    if (cfg.N >= 2) {
      lr = check_licq(prob, fp, cfg.N, 1, std::nullopt, cfg.tol.rank_tol, cfg.tol.active_tol, cfg.tol.trunc_tol);
      rep["licq"] = licq_json(lr);
    }
    rep["licq_certificate"] = cfg.N >= 2 && lr.pass;

    ojson tables = ojson::array();
    for (auto t : cfg.certify.table_times) {
      const CompactProblem cp = build_compact(prob, fp.x(t), fp.x(t + NN), cfg.N);
      const SegmentSolution s = solve_segment(cp, static_cast<Eigen::Index>(t), cfg.tol.active_tol);
      if (!s.ok()) throw InvariantViolation("multiplier table: window at t=" + std::to_string(t) + " not solvable");
      std::ostringstream os;
      write_multiplier_table(os, cp, s.kkt);
      io::atomic_write(cfg.out / ("multipliers_t" + std::to_string(t) + ".txt"), os.str());
      ojson lam = ojson::array();
      for (const auto& l : s.kkt.lambda) lam.push_back(vec_json(l));
      ojson act = ojson::array();
      for (auto r : s.kkt.active) {
        const RowId id = row_identity(cp, r);
        act.push_back({{"row", r}, {"step", static_cast<Eigen::Index>(t) + id.step}, {"input", id.input},
                       {"index", id.index}, {"value", s.kkt.delta[r]}});
      }
      tables.push_back({{"t", t}, {"lambda", lam}, {"active_delta", act},
                        {"stationarity_residual", s.kkt.stationarity_residual}});
    }
    rep["tables"] = tables;

    ojson shifts = ojson::array();
    for (auto t : cfg.certify.shift_times) {
      const ShiftReport sh = multiplier_shift_check(prob, fp, cfg.N, t, cfg.tol.shift_tol);
      const StitchReport st = stitch_and_verify(prob, fp, cfg.N, t, cfg.tol.shift_tol);
      shifts.push_back({{"t", t},
                        {"shift", {{"applicable", sh.applicable}, {"pass", sh.pass}, {"active_match", sh.active_match},
                                   {"lambda_dev", sh.lambda_dev}, {"delta_dev", sh.delta_dev}, {"note", sh.note}}},
                        {"stitch", {{"applicable", st.applicable}, {"pass", st.pass},
                                    {"stationarity", st.stationarity}, {"dual", st.dual},
                                    {"complementarity", st.complementarity}, {"primal", st.primal},
                                    {"note", st.note}}}});
    }
    rep["shift"] = shifts;

    const OracleSolution orc = solve_long_horizon(prob, cfg.x_S, cfg.T_oracle);
    const OptimalityVerdict v =
        verify_optimality(prob, fp, orc, cfg.tol.state_tol, cfg.tol.cost_rel_tol, 10, cfg.N + 1);
    rep["optimality"] = {{"cost", v.cost},           {"oracle_cost", v.oracle_cost}, {"gap", v.gap},
                         {"rel_gap", v.rel_gap},     {"state_deviation", v.state_deviation},
                         {"segment_gap", v.segment_gap}, {"optimal", v.optimal}};

    std::size_t st = 0;
    if (cfg.certify.suffix_t) {
      st = *cfg.certify.suffix_t;
    } else if (!lr.failing_times().empty()) {
      st = static_cast<std::size_t>(lr.failing_times().back());
    }
    const SuffixCheck sf = suffix_optimality(prob, fp, st, cfg.T_oracle);
    rep["suffix"] = {{"t", st}, {"closed_loop", sf.closed_loop}, {"optimum", sf.optimum}, {"rel_gap", sf.rel_gap},
                     {"optimal", std::abs(sf.rel_gap) <= cfg.tol.cost_rel_tol}};

    const std::string verdict = v.optimal ? "optimal" : "suboptimal";
    rep["verdict"] = verdict;
    // a satisfied certificate must come with an optimal verdict
    rep["consistent"] = !(rep["licq_certificate"].get<bool>() && !v.optimal);
    if (expect) {
      rep["expect"] = *expect;
      rep["matches_expect"] = *expect == verdict;
    }
    write_json(cfg.out / "certificate.json", rep);
    std::cerr << "certify: verdict " << verdict << '\n';
    return expectation_exit(expect, verdict);
  } catch (const Error& e) {
    std::cerr << "certify: " << e.what() << '\n';
    rep["diagnostic"] = e.what();
    rep["verdict"] = "error";
    write_json(cfg.out / "certificate.json", rep);
    return kExitInvariant;
  }
}

inline int cmd_enlarge(const RunConfig& cfg, const std::optional<RoaMode>& mode_flag = std::nullopt) {
  namespace fs = std::filesystem;
  using namespace detail;
  const auto& prob = cfg.problem;
  if (!cfg.enlarge) {
    std::cerr << "enlarge: config has no enlargement block\n";
    return kExitUsage;
  }
  if (prob.n() != 2) {
    std::cerr << "enlarge: planar systems only\n";
    return kExitUsage;
  }
  EnlargementSchedule sched;
  sched.M = cfg.enlarge->M;
  sched.mode = mode_flag ? *mode_flag : cfg.enlarge->mode;
  sched.directions = cfg.enlarge->D;
  sched.per_vertex_update = cfg.enlarge->per_vertex_update;
  if (sched.mode == RoaMode::directional && sched.directions.empty()) {
    std::cerr << "enlarge: directional mode needs enlargement.D\n";
    return kExitUsage;
  }
  fs::create_directories(cfg.out);

  ojson rep;
  rep["N"] = cfg.N;
  rep["M"] = sched.M;
  rep["mode"] = to_string(sched.mode);
  try {
    Polyhedron oinf;
    const RoaResult base = baseline_mpc_roa(prob, cfg.N, &oinf);
    const auto oinf_v = vertices_2d(oinf);
    io::atomic_write(cfg.out / "o_inf.dat", [&](std::ostream& os) { write_polygon(os, oinf_v); });
    io::atomic_write(cfg.out / "mpc_roa.dat", [&](std::ostream& os) { write_polygon(os, base.vertices); });
    const bool c1 = polygon_contained_in(oinf_v, base.vertices, 1e-6);
    rep["o_inf"] = {{"vertices", polygon_json(oinf_v)}, {"area", polygon_area(oinf_v)}};
    rep["mpc_roa"] = {{"vertices", polygon_json(base.vertices)}, {"area", polygon_area(base.vertices)}};
    rep["containment"]["o_inf_in_mpc_roa"] = c1;
    if (sched.M == 0) {
      write_json(cfg.out / "enlarge_report.json", rep);
      return kExitOk;
    }

    const InvariantSetResult cinf = max_ctrl_invariant(prob.sys, prob.cons);
    if (!cinf.converged) throw ResourceError("maximal control invariant set did not converge");
    const auto cinf_v = vertices_2d(cinf.set);
    io::atomic_write(cfg.out / "c_inf.dat", [&](std::ostream& os) { write_polygon(os, cinf_v); });
    rep["c_inf"] = {{"vertices", polygon_json(cinf_v)}, {"area", polygon_area(cinf_v)}};

    const EnlargementResult er = run_enlargement(prob, sched, cfg.N, cfg.lmpc());
    const std::string stem = "roa_" + to_string(sched.mode);
    ojson steps = ojson::array();
    bool nested = true;
    for (std::size_t i = 0; i < er.roas.size(); ++i) {
      const auto& v = er.roas[i].vertices;
      io::atomic_write(cfg.out / numbered(stem, static_cast<int>(i)), [&](std::ostream& os) { write_polygon(os, v); });
      if (i > 0) nested = nested && polygon_contained_in(er.roas[i - 1].vertices, v, 1e-6);
      steps.push_back({{"step", i}, {"area", polygon_area(v)}, {"vertices", v.size()},
                       {"directions_used", er.roas[i].directions_used}});
    }
    io::atomic_write(cfg.out / "safe_set.dat", [&](std::ostream& os) { write_safe_set(os, er.safe_set); });
    io::atomic_write(cfg.out / "seeds.dat", [&](std::ostream& os) {
      os << "# step x1 x2 shrink skipped failed cost\n";
      for (const auto& s : er.seeds)
        os << s.step << ' ' << io::num(s.seed[0]) << ' ' << io::num(s.seed[1]) << ' ' << io::num(s.shrink) << ' '
           << s.skipped << ' ' << s.failed << ' ' << io::num(s.cost) << '\n';
    });
    int failed = 0;
    for (const auto& s : er.seeds) failed += s.failed ? 1 : 0;

    const auto& fin = er.roas.back().vertices;
    rep["steps"] = steps;
    rep["failed_seeds"] = failed;
    rep["lmpc_roa"] = {{"vertices", polygon_json(fin)}, {"area", polygon_area(fin)}};
    rep["containment"]["mpc_roa_in_lmpc_roa"] = polygon_contained_in(base.vertices, fin, 1e-6);
    rep["containment"]["lmpc_roa_in_c_inf"] = polygon_contained_in(fin, cinf_v, 1e-3);
    rep["containment"]["c_inf_in_lmpc_roa"] = polygon_contained_in(cinf_v, fin, 1e-3);
    rep["containment"]["roa_nested_across_steps"] = nested;
    write_json(cfg.out / "enlarge_report.json", rep);
    std::cerr << "enlarge: " << to_string(sched.mode) << " mode, final area " << polygon_area(fin) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "enlarge: " << e.what() << '\n';
    rep["error"] = e.what();
    write_json(cfg.out / "enlarge_report.json", rep);
    return kExitInvariant;
  }
}

}  // namespace lmpc::cli

#endif  // LMPC_TOOLS_COMMANDS_HPP
