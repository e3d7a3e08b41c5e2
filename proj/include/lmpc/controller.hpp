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
#ifndef LMPC_CONTROLLER_HPP
#define LMPC_CONTROLLER_HPP

// Learning MPC: finite-time problem with the sampled safe set as terminal
// constraint and its interpolated cost-to-go as terminal cost, the
// receding-horizon policy, closed-loop iterations, and the iteration loop
// that runs until the closed-loop trajectory stops changing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lmpc/model.hpp"
#include "lmpc/qp.hpp"
#include "lmpc/safeset.hpp"

namespace lmpc {

struct LmpcConfig {
  int horizon = 3;                 // N
  double trunc_tol = kTruncationTol;
  double fixedpoint_tol = 1e-6;    // max-abs state deviation between iterations
  double cost_tol_rel = 1e-14;     // cost_tol = cost_tol_rel * (1 + J^0)
  int max_steps = 300;             // T_max, per closed-loop iteration
  int max_iterations = 50;

  void validate() const {
    detail::require(horizon >= 1, "LmpcConfig: horizon must be >= 1");
    detail::require(trunc_tol > 0 && fixedpoint_tol > 0 && cost_tol_rel > 0, "LmpcConfig: tolerances must be > 0");
    detail::require(max_steps >= horizon, "LmpcConfig: max_steps must be >= horizon");
    detail::require(max_iterations >= 1, "LmpcConfig: max_iterations must be >= 1");
  }
};

/// Column layout of the finite-time QP: x_0..x_N, u_0..u_{N-1}, gamma.
struct FtocpLayout {
  Eigen::Index n = 0, d = 0, horizon = 0, points = 0;

  [[nodiscard]] Eigen::Index x(Eigen::Index k) const { return k * n; }
  [[nodiscard]] Eigen::Index u(Eigen::Index k) const { return (horizon + 1) * n + k * d; }
  [[nodiscard]] Eigen::Index gamma() const { return (horizon + 1) * n + horizon * d; }
  [[nodiscard]] Eigen::Index size() const { return gamma() + points; }
};

struct Ftocp {
  QpProblem qp;
  FtocpLayout layout;
};

/// Assembles the finite-time QP at state x_t over terminal points P (columns)
/// with costs c: dynamics, state and input constraints over the horizon,
/// x_N = P gamma, sum gamma = 1, gamma >= 0, cost sum h + c' gamma. State
/// rows start at k = 1.
/// With scale s != 1 the problem is posed in units x / s, u / s, cost / s^2.
inline Ftocp build_ftocp(const ControlProblem& prob, const Mat& points, const Vec& costs, const Vec& x_t, int horizon,
                         double scale = 1.0) {
  detail::require(points.cols() >= 1 && points.cols() == costs.size() && points.rows() == prob.n(),
                  "build_ftocp: bad terminal point set");
  detail::require(horizon >= 1, "build_ftocp: horizon must be >= 1");
  detail::require(x_t.size() == prob.n() && x_t.allFinite(), "build_ftocp: bad initial state");
  detail::require(scale > 0.0, "build_ftocp: scale must be > 0");
  const auto n = prob.n(), d = prob.d(), N = static_cast<Eigen::Index>(horizon);
  FtocpLayout L{n, d, N, points.cols()};
  const auto nv = L.size();
  const auto& A = prob.sys.A();
  const auto& B = prob.sys.B();
  const auto& c = prob.cons;

  Ftocp out;
  out.layout = L;
  QpProblem& qp = out.qp;
  qp.H = Mat::Zero(nv, nv);
  for (Eigen::Index k = 0; k < N; ++k) {
    qp.H.block(L.x(k), L.x(k), n, n) = prob.cost.Q();
    qp.H.block(L.u(k), L.u(k), d, d) = prob.cost.R();
  }
  qp.f = Vec::Zero(nv);
  qp.f.tail(L.points) = costs / (scale * scale);

  const auto me = n + N * n + n + 1;
  qp.A_eq = Mat::Zero(me, nv);
  qp.b_eq = Vec::Zero(me);
  qp.A_eq.block(0, L.x(0), n, n).setIdentity();
  qp.b_eq.head(n) = x_t / scale;
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto r = n + k * n;
    qp.A_eq.block(r, L.x(k + 1), n, n).setIdentity();
    qp.A_eq.block(r, L.x(k), n, n) = -A;
    qp.A_eq.block(r, L.u(k), n, d) = -B;
  }
  const auto rt = n + N * n;
  qp.A_eq.block(rt, L.x(N), n, n).setIdentity();
  qp.A_eq.block(rt, L.gamma(), n, L.points) = -points / scale;
  qp.A_eq.block(rt + n, L.gamma(), 1, L.points).setOnes();
  qp.b_eq[rt + n] = 1.0;

  // No state rows at k = 0: x_0 is the measured state, checked separately
  // with a tolerance, and round-off just outside X must not make this empty.
  const auto mi = (N - 1) * c.mx() + N * c.mu() + L.points;
  qp.A_in = Mat::Zero(mi, nv);
  qp.b_in = Vec::Zero(mi);
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < N; ++k) {
    if (c.mx() && k > 0) {
      qp.A_in.block(r, L.x(k), c.mx(), n) = c.F_x;
      qp.b_in.segment(r, c.mx()) = c.b_x / scale;
      r += c.mx();
    }
    if (c.mu()) {
      qp.A_in.block(r, L.u(k), c.mu(), d) = c.F_u;
      qp.b_in.segment(r, c.mu()) = c.b_u / scale;
      r += c.mu();
    }
  }
  qp.A_in.block(r, L.gamma(), L.points, L.points) = -Mat::Identity(L.points, L.points);
  return out;
}

inline Ftocp build_ftocp(const ControlProblem& prob, const SampledSafeSet& ss, const Vec& x_t, int horizon) {
  detail::require(!ss.empty(), "build_ftocp: empty safe set");
  return build_ftocp(prob, ss.point_matrix(), ss.cost_vector(), x_t, horizon);
}

/// Solves the finite-time QP. Near the origin the optimal value is many
/// orders of magnitude below the stored costs and a single solve loses the
/// small terms to round-off; in that regime the problem is re-solved on the
/// cheap terminal points in rescaled units, and the restriction is certified
/// exact by checking the reduced cost of every excluded point (columns with
/// negative reduced cost are added and the solve repeated).
inline QpSolution solve_ftocp(const ControlProblem& prob, const SampledSafeSet& ss, const Vec& x_t, int horizon) {
  const Ftocp full = build_ftocp(prob, ss, x_t, horizon);
  QpSettings st;
  st.check_psd = false;
  QpSolution sol = solve_qp(full.qp, st);
  if (!sol.ok()) return sol;

  const Mat P = ss.point_matrix();
  const Vec c = ss.cost_vector();
  const auto& L = full.layout;
  if (sol.objective > 1e-6 * (1.0 + c.maxCoeff())) return sol;

  const double scale = std::max({x_t.lpNorm<Eigen::Infinity>(), std::sqrt(std::max(sol.objective, 0.0)), 1e-150});
  std::vector<char> chosen(static_cast<std::size_t>(L.points), 0);
  const double c_cut = 1e4 * std::max(sol.objective, 0.0);
  for (Eigen::Index i = 0; i < L.points; ++i)
    if (c[i] <= c_cut || sol.z[L.gamma() + i] > 1e-9 || P.col(i).lpNorm<Eigen::Infinity>() == 0.0)
      chosen[static_cast<std::size_t>(i)] = 1;

  for (int round = 0; round < 50; ++round) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < L.points; ++i)
      if (chosen[static_cast<std::size_t>(i)]) idx.push_back(i);
    const auto k = static_cast<Eigen::Index>(idx.size());
    Mat Ps(P.rows(), k);
    Vec cs(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      Ps.col(j) = P.col(idx[static_cast<std::size_t>(j)]);
      cs[j] = c[idx[static_cast<std::size_t>(j)]];
    }
    const Ftocp red = build_ftocp(prob, Ps, cs, x_t, horizon, scale);
    const QpSolution rs = solve_qp(red.qp, st);
    if (!rs.ok()) return sol;

    // Reduced cost of gamma_j in scaled units: c_j / s^2 - (p_j / s)' nu + mu.
    const auto rt = L.n + L.horizon * L.n;
    const Vec nu = rs.lambda.segment(rt, L.n);
    const double mu = rs.lambda[rt + L.n];
    bool added = false;
    for (Eigen::Index i = 0; i < L.points; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) continue;
      const Vec ps = P.col(i) / scale;
      const double ci = c[i] / (scale * scale);
      const double rc = ci - ps.dot(nu) + mu;
      if (rc < -1e-12 * (ci + ps.cwiseAbs().dot(nu.cwiseAbs()) + std::abs(mu))) {
        chosen[static_cast<std::size_t>(i)] = 1;
        added = true;
      }
    }
    if (added) continue;

    QpSolution out = rs;
    out.z = Vec::Zero(L.size());
    out.z.head(L.gamma()) = scale * rs.z.head(L.gamma());
    for (Eigen::Index j = 0; j < k; ++j) out.z[L.gamma() + idx[static_cast<std::size_t>(j)]] = rs.z[red.layout.gamma() + j];
    out.objective = scale * scale * rs.objective;
    out.lambda.resize(0);
    out.delta.resize(0);
    out.active.clear();
    return out;
  }
  return sol;
}

struct PolicyResult {
  Vec u;
  Trajectory plan_states;  // x_{t|t} .. x_{t+N|t}
  Trajectory plan_inputs;
  Vec gamma;
  double value = 0.0;  // optimal cost of the finite-time problem
};

/// First optimal input of the finite-time problem. Infeasibility here
/// contradicts recursive feasibility and is raised as InvariantViolation.
inline PolicyResult policy(const ControlProblem& prob, const SampledSafeSet& ss, const Vec& x_t, int horizon) {
  const QpSolution s = solve_ftocp(prob, ss, x_t, horizon);
  if (!s.ok()) {
    throw InvariantViolation("policy: finite-time problem " + to_string(s.status) +
                             " at a state where recursive feasibility requires a solution");
  }
  const FtocpLayout L{prob.n(), prob.d(), static_cast<Eigen::Index>(horizon), static_cast<Eigen::Index>(ss.size())};
  PolicyResult r;
  for (Eigen::Index k = 0; k <= L.horizon; ++k) r.plan_states.push_back(s.z.segment(L.x(k), L.n));
  for (Eigen::Index k = 0; k < L.horizon; ++k) r.plan_inputs.push_back(s.z.segment(L.u(k), L.d));
  r.u = r.plan_inputs.front();
  r.gamma = s.z.tail(L.points);
  r.value = s.objective;
  return r;
}

/// One closed-loop execution of the task.
struct IterationRecord {
  int iteration = 0;
  Trajectory states;          // x_0 .. x_T (x_T inside the truncation ball)
  Trajectory inputs;          // u_0 .. u_{T-1}
  std::vector<double> stage_costs;
  std::vector<double> values;  // finite-time optimal value at each x_t (empty for iteration 0)
  double cost = 0.0;           // J^j = sum of stage costs
  double chain_slack = std::numeric_limits<double>::infinity();      // min over t of both sandwich gaps
  double decrease_slack = std::numeric_limits<double>::infinity();   // min_t V_t - h_t - V_{t+1}
  double prediction_error = 0.0;                                     // max ||x_{t+1} - x_{t+1|t}||
};

inline void validate_trajectory(const ControlProblem& prob, const Trajectory& states, const Trajectory& inputs,
                                double dyn_tol = 1e-9, double cons_tol = kConstraintTol) {
  detail::require(states.size() == inputs.size() + 1, "validate_trajectory: expected one more state than inputs");
  for (std::size_t t = 0; t < states.size(); ++t) {
    const Vec u = t < inputs.size() ? inputs[t] : Vec(Vec::Zero(prob.d()));
    const auto v = check_constraints(prob.cons, states[t], u, cons_tol);
    if (!v.feasible)
      throw InvariantViolation("trajectory violates constraints at t=" + std::to_string(t) +
                               " (state " + std::to_string(v.state) + ", input " + std::to_string(v.input) + ")");
    if (t < inputs.size()) {
      const double e = (step(prob.sys, states[t], inputs[t]) - states[t + 1]).lpNorm<Eigen::Infinity>();
      if (e > dyn_tol * (1.0 + states[t + 1].lpNorm<Eigen::Infinity>()))
        throw InvariantViolation("trajectory inconsistent with dynamics at t=" + std::to_string(t) +
                                 " (error " + std::to_string(e) + ")");
    }
  }
}

inline IterationRecord record_from(const ControlProblem& prob, Trajectory states, Trajectory inputs, int iteration) {
  IterationRecord rec;
  rec.iteration = iteration;
  rec.states = std::move(states);
  rec.inputs = std::move(inputs);
  for (std::size_t t = 0; t < rec.inputs.size(); ++t) {
    rec.stage_costs.push_back(stage_cost(prob.cost, rec.states[t], rec.inputs[t]));
    rec.cost += rec.stage_costs.back();
  }
  return rec;
}

/// Closed loop under the learned policy from x_S. If previous_cost is given
/// the sandwich J^{j-1} >= sum_{k<t} h + V_t >= J^j is evaluated at every t
/// and its smallest slack recorded.
inline IterationRecord run_iteration(const ControlProblem& prob, const SampledSafeSet& ss, const Vec& x_S,
                                     const LmpcConfig& cfg, int iteration = 1,
                                     std::optional<double> previous_cost = std::nullopt) {
  cfg.validate();
  IterationRecord rec;
  rec.iteration = iteration;
  Vec x = x_S;
  rec.states.push_back(x);
  for (int t = 0;; ++t) {
    const PolicyResult pr = policy(prob, ss, x, cfg.horizon);
    if (x.norm() <= cfg.trunc_tol && pr.u.norm() <= cfg.trunc_tol) {
      rec.values.push_back(pr.value);
      break;
    }
    if (t >= cfg.max_steps) {
      throw DivergenceError("run_iteration: closed loop did not reach the truncation ball within " +
                            std::to_string(cfg.max_steps) + " steps (||x|| = " + std::to_string(x.norm()) + ")");
    }
    const Vec next = step(prob.sys, x, pr.u);
    rec.prediction_error = std::max(rec.prediction_error, (next - pr.plan_states[1]).lpNorm<Eigen::Infinity>());
    rec.inputs.push_back(pr.u);
    rec.values.push_back(pr.value);
    const double h = stage_cost(prob.cost, x, pr.u);
    rec.stage_costs.push_back(h);
    rec.cost += h;
    x = next;
    rec.states.push_back(x);
  }

  for (std::size_t t = 0; t + 1 < rec.values.size(); ++t)
    rec.decrease_slack = std::min(rec.decrease_slack, rec.values[t] - rec.stage_costs[t] - rec.values[t + 1]);
  if (previous_cost) {
    double partial = 0.0;
    for (std::size_t t = 0; t < rec.values.size(); ++t) {
      const double mid = partial + rec.values[t];
      rec.chain_slack = std::min({rec.chain_slack, *previous_cost - mid, mid - rec.cost});
      if (t < rec.stage_costs.size()) partial += rec.stage_costs[t];
    }
  }
  return rec;
}

/// Initial feasible trajectory: open-loop solution of a long-horizon problem
/// with input weight 50 R and input bounds tightened to 90%, terminal state
/// pinned to the origin, then forward-simulated.
inline std::pair<Trajectory, Trajectory> generate_initial_trajectory(const ControlProblem& prob, const Vec& x_S,
                                                                     int horizon = 300, double input_weight = 50.0,
                                                                     double input_shrink = 0.9) {
  detail::require(x_S.size() == prob.n(), "generate_initial_trajectory: dimension mismatch");
  const auto n = prob.n(), d = prob.d(), T = static_cast<Eigen::Index>(horizon);
  if (x_S.lpNorm<Eigen::Infinity>() == 0.0) return {Trajectory{x_S}, Trajectory{}};
  const auto& c = prob.cons;

  // z = (x_0, u_0, ..., x_{T-1}, u_{T-1}, x_T)
  const auto blk = n + d;
  const auto nv = T * blk + n;
  QpProblem qp;
  qp.H = Mat::Zero(nv, nv);
  for (Eigen::Index k = 0; k < T; ++k) {
    qp.H.block(k * blk, k * blk, n, n) = prob.cost.Q();
    qp.H.block(k * blk + n, k * blk + n, d, d) = input_weight * prob.cost.R();
  }
  qp.f = Vec::Zero(nv);
  qp.A_eq = Mat::Zero(n * (T + 2), nv);
  qp.b_eq = Vec::Zero(n * (T + 2));
  qp.A_eq.block(0, 0, n, n).setIdentity();
  qp.b_eq.head(n) = x_S;
  for (Eigen::Index k = 0; k < T; ++k) {
    const auto r = n * (k + 1);
    qp.A_eq.block(r, (k + 1) * blk, n, n).setIdentity();
    qp.A_eq.block(r, k * blk, n, n) = -prob.sys.A();
    qp.A_eq.block(r, k * blk + n, n, d) = -prob.sys.B();
  }
  qp.A_eq.block(n * (T + 1), T * blk, n, n).setIdentity();
  const auto mi = T * (c.mx() + c.mu());
  qp.A_in = Mat::Zero(mi, nv);
  qp.b_in = Vec::Zero(mi);
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < T; ++k) {
    qp.A_in.block(r, k * blk, c.mx(), n) = c.F_x;
    qp.b_in.segment(r, c.mx()) = c.b_x;
    r += c.mx();
    qp.A_in.block(r, k * blk + n, c.mu(), d) = c.F_u;
    qp.b_in.segment(r, c.mu()) = input_shrink * c.b_u;
    r += c.mu();
  }
  QpSettings st;
  st.check_psd = false;
  const QpSolution s = solve_qp(qp, st);
  if (!s.ok())
    throw InfeasibleError("generate_initial_trajectory: no admissible trajectory to the origin from x_S (" +
                          to_string(s.status) + ")");

  Trajectory xs{x_S}, us;
  for (Eigen::Index k = 0; k < T; ++k) {
    us.push_back(s.z.segment(k * blk + n, d));
    xs.push_back(step(prob.sys, xs.back(), us.back()));
  }
  validate_trajectory(prob, xs, us, 1e-9, 1e-7);
  return {xs, us};
}

enum class DichotomyBranch { strict_decrease, fixed_trajectory, violated };

inline std::string to_string(DichotomyBranch b) {
  switch (b) {
    case DichotomyBranch::strict_decrease:
      return "strict-decrease";
    case DichotomyBranch::fixed_trajectory:
      return "fixed-trajectory";
    case DichotomyBranch::violated:
      return "violated";
  }
  return "unknown";
}

struct IterationHistory {
  std::vector<IterationRecord> iterations;    // [0] is the initial trajectory
  std::vector<DichotomyBranch> branches;      // per iteration j >= 1
  std::vector<double> deviations;             // max state deviation from j-1, per j >= 1
  std::optional<int> converged_at;
  double cost_tol = 0.0;
  SampledSafeSet safe_set;

  [[nodiscard]] const IterationRecord& fixed_point() const { return iterations.back(); }
};

/// Max-abs deviation between two state sequences; the shorter one is padded
/// with the origin.
inline double trajectory_deviation(const Trajectory& a, const Trajectory& b) {
  const std::size_t len = std::max(a.size(), b.size());
  double dev = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    const Eigen::Index n = t < a.size() ? a[t].size() : b[t].size();
    const Vec va = t < a.size() ? a[t] : Vec(Vec::Zero(n));
    const Vec vb = t < b.size() ? b[t] : Vec(Vec::Zero(n));
    dev = std::max(dev, (va - vb).lpNorm<Eigen::Infinity>());
  }
  return dev;
}

/// Iterates run_iteration / add_trajectory until consecutive closed loops
/// agree within fixedpoint_tol. Throws InvariantViolation if the iteration
/// cost increases by more than cost_tol.
inline IterationHistory run_until_fixed_point(const ControlProblem& prob, const Vec& x_S, const LmpcConfig& cfg,
                                              std::optional<std::pair<Trajectory, Trajectory>> initial = std::nullopt) {
  cfg.validate();
  auto [xs0, us0] = initial ? *initial : generate_initial_trajectory(prob, x_S, cfg.max_steps);
  validate_trajectory(prob, xs0, us0);

  IterationHistory h;
  h.safe_set = add_trajectory(SampledSafeSet{}, prob.cost, xs0, us0, 0, cfg.trunc_tol);
  {
    const auto& tr = h.safe_set.trajectories().back();
    Trajectory st(tr.states.begin(), tr.states.end());
    Trajectory in(tr.inputs.begin(), tr.inputs.end() - 1);
    h.iterations.push_back(record_from(prob, st, in, 0));
  }
  h.cost_tol = cfg.cost_tol_rel * (1.0 + h.iterations.front().cost);

  for (int j = 1; j <= cfg.max_iterations; ++j) {
    const double prev = h.iterations.back().cost;
    IterationRecord rec = run_iteration(prob, h.safe_set, x_S, cfg, j, prev);
    if (rec.cost > prev + h.cost_tol) {
      throw InvariantViolation("iteration cost increased at j=" + std::to_string(j) + ": " + std::to_string(prev) +
                               " -> " + std::to_string(rec.cost));
    }
    const double dev = trajectory_deviation(rec.states, h.iterations.back().states);
    const bool strict = prev - rec.cost > h.cost_tol;
    const bool fixed = dev <= cfg.fixedpoint_tol;
    h.branches.push_back(strict ? DichotomyBranch::strict_decrease
                                : (fixed ? DichotomyBranch::fixed_trajectory : DichotomyBranch::violated));
    h.deviations.push_back(dev);
    h.safe_set = add_trajectory(h.safe_set, prob.cost, rec.states, rec.inputs, j, cfg.trunc_tol);
    h.iterations.push_back(std::move(rec));
    if (fixed) {
      h.converged_at = j;
      break;
    }
  }
  return h;
}

}  // namespace lmpc

#endif  // LMPC_CONTROLLER_HPP
