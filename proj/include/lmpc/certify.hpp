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
#ifndef LMPC_CERTIFY_HPP
#define LMPC_CERTIFY_HPP

// Optimality certificates for a converged closed-loop trajectory.
//
// Segment problem between two states of the trajectory, in compact form over
// z = (x_0, u_0, ..., x_{T-1}, u_{T-1}):
//
//   min z' Q_T z   s.t.  G z = b,  F z <= f
//
// with equality blocks
//   x_0 = x_a
//   x_k - A x_{k-1} - B u_{k-1} = 0        k = 1..T-1
//   -A x_{T-1} - B u_{T-1} = -x_b
// and multipliers normalized so that G' lambda + F' delta = -2 Q_T z.

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lmpc/model.hpp"
#include "lmpc/qp.hpp"

namespace lmpc {

struct CompactProblem {
  Mat Q_T;
  Mat G_eq;
  Vec b_eq;
  Mat F_in;
  Vec b_in;
  Eigen::Index T = 0, n = 0, d = 0, mx = 0, mu = 0;
  Vec x_a, x_b;

  [[nodiscard]] Eigen::Index block() const { return n + d; }
  [[nodiscard]] Eigen::Index rows_per_step() const { return mx + mu; }
};

inline CompactProblem build_compact(const ControlProblem& prob, const Vec& x_a, const Vec& x_b, int T) {
  detail::require(T >= 1, "build_compact: T must be >= 1");
  detail::require(x_a.size() == prob.n() && x_b.size() == prob.n(), "build_compact: endpoint dimension mismatch");
  const auto n = prob.n(), d = prob.d(), TT = static_cast<Eigen::Index>(T);
  const auto& c = prob.cons;
  CompactProblem cp;
  cp.T = TT;
  cp.n = n;
  cp.d = d;
  cp.mx = c.mx();
  cp.mu = c.mu();
  cp.x_a = x_a;
  cp.x_b = x_b;
  const auto blk = n + d;
  const auto nz = blk * TT;

  cp.Q_T = Mat::Zero(nz, nz);
  for (Eigen::Index k = 0; k < TT; ++k) {
    cp.Q_T.block(k * blk, k * blk, n, n) = prob.cost.Q();
    cp.Q_T.block(k * blk + n, k * blk + n, d, d) = prob.cost.R();
  }

  cp.G_eq = Mat::Zero(n * (TT + 1), nz);
  cp.b_eq = Vec::Zero(n * (TT + 1));
  cp.G_eq.block(0, 0, n, n).setIdentity();
  cp.b_eq.head(n) = x_a;
  for (Eigen::Index k = 1; k <= TT; ++k) {
    const auto r = k * n;
    cp.G_eq.block(r, (k - 1) * blk, n, n) = -prob.sys.A();
    cp.G_eq.block(r, (k - 1) * blk + n, n, d) = -prob.sys.B();
    if (k < TT) cp.G_eq.block(r, k * blk, n, n).setIdentity();
  }
  cp.b_eq.tail(n) = -x_b;

  const auto m = c.mx() + c.mu();
  cp.F_in = Mat::Zero(m * TT, nz);
  cp.b_in = Vec::Zero(m * TT);
  for (Eigen::Index k = 0; k < TT; ++k) {
    cp.F_in.block(k * m, k * blk, c.mx(), n) = c.F_x;
    cp.F_in.block(k * m + c.mx(), k * blk + n, c.mu(), d) = c.F_u;
    cp.b_in.segment(k * m, c.mx()) = c.b_x;
    cp.b_in.segment(k * m + c.mx(), c.mu()) = c.b_u;
  }
  return cp;
}

/// Identity of one inequality row of a compact problem.
struct RowId {
  Eigen::Index step = 0;   // local step k (absolute time t + k)
  bool input = false;      // input-constraint family, else state
  Eigen::Index index = 0;  // row within F_x or F_u
};

inline RowId row_identity(const CompactProblem& cp, Eigen::Index row) {
  const auto m = cp.rows_per_step();
  RowId id;
  id.step = row / m;
  const auto r = row % m;
  id.input = r >= cp.mx;
  id.index = id.input ? r - cp.mx : r;
  return id;
}

struct KktRecord {
  Eigen::Index t0 = 0;                 // absolute time of the first segment step
  std::vector<Vec> lambda;             // T + 1 blocks, lambda[k] = lambda_{t0+k | t0}
  Vec delta;                           // all inequality multipliers (zero where inactive)
  std::vector<Eigen::Index> active;    // active inequality rows (ascending)
  double stationarity_residual = 0.0;
  KktResiduals residuals;

  [[nodiscard]] std::vector<Eigen::Index> active_at_step(const CompactProblem& cp, Eigen::Index k) const {
    std::vector<Eigen::Index> out;
    for (auto r : active)
      if (r / cp.rows_per_step() == k) out.push_back(r % cp.rows_per_step());
    return out;
  }
};

struct SegmentSolution {
  QpStatus status = QpStatus::infeasible;
  Vec z;
  double cost = 0.0;
  KktRecord kkt;

  [[nodiscard]] bool ok() const { return status == QpStatus::optimal; }
};

inline QpProblem compact_qp(const CompactProblem& cp) {
  QpProblem qp;
  qp.H = cp.Q_T;
  qp.f = Vec::Zero(cp.Q_T.rows());
  qp.A_eq = cp.G_eq;
  qp.b_eq = cp.b_eq;
  qp.A_in = cp.F_in;
  qp.b_in = cp.b_in;
  return qp;
}

inline SegmentSolution solve_segment(const CompactProblem& cp, Eigen::Index t0 = 0, double tol_active = 1e-6) {
  const QpProblem qp = compact_qp(cp);
  QpSettings st;
  st.check_psd = false;
  st.tol_active = tol_active;
  const QpSolution s = solve_qp(qp, st);
  SegmentSolution out;
  out.status = s.status;
  if (!s.ok()) return out;
  out.z = s.z;
  out.cost = s.objective;
  out.kkt.t0 = t0;
  for (Eigen::Index k = 0; k <= cp.T; ++k) out.kkt.lambda.push_back(s.lambda.segment(k * cp.n, cp.n));
  out.kkt.delta = s.delta;
  out.kkt.active = s.active;
  out.kkt.residuals = kkt_residuals(qp, s);
  out.kkt.stationarity_residual = out.kkt.residuals.stationarity;
  return out;
}

/// [G_eq; F_in restricted to the active rows], active rows in ascending
/// order (time-major, then row index).
inline Mat build_M(const CompactProblem& cp, const std::vector<Eigen::Index>& active) {
  std::vector<Eigen::Index> rows(active.begin(), active.end());
  std::sort(rows.begin(), rows.end());
  Mat M(cp.G_eq.rows() + static_cast<Eigen::Index>(rows.size()), cp.G_eq.cols());
  M.topRows(cp.G_eq.rows()) = cp.G_eq;
  for (std::size_t i = 0; i < rows.size(); ++i) M.row(cp.G_eq.rows() + static_cast<Eigen::Index>(i)) = cp.F_in.row(rows[i]);
  return M;
}

struct RankInfo {
  Eigen::Index rank = 0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;  // smallest of the min(rows, cols) singular values
  Vec singular_values;
};

inline RankInfo numerical_rank(const Mat& M, double rank_tol = 1e-7) {
  RankInfo r;
  if (M.size() == 0) return r;
  Eigen::JacobiSVD<Mat> svd(M);
  r.singular_values = svd.singularValues();
  r.sigma_max = r.singular_values[0];
  r.sigma_min = r.singular_values[r.singular_values.size() - 1];
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i)
    if (r.singular_values[i] > rank_tol * r.sigma_max) ++r.rank;
  return r;
}

/// Stored converged trajectory with origin padding past its end.
struct FixedPoint {
  Trajectory states;  // x_0 .. x_L
  Trajectory inputs;  // u_0 .. u_{L-1}

  [[nodiscard]] Eigen::Index n() const { return states.front().size(); }
  [[nodiscard]] Eigen::Index d() const { return inputs.empty() ? 1 : inputs.front().size(); }
  [[nodiscard]] Vec x(std::size_t t) const { return t < states.size() ? states[t] : Vec(Vec::Zero(n())); }
  [[nodiscard]] Vec u(std::size_t t) const { return t < inputs.size() ? inputs[t] : Vec(Vec::Zero(d())); }

  /// z = Vec(x_t, u_t, ..., x_{t+T-1}, u_{t+T-1}).
  [[nodiscard]] Vec segment_z(std::size_t t, std::size_t T) const {
    const auto blk = n() + d();
    Vec z(blk * static_cast<Eigen::Index>(T));
    for (std::size_t k = 0; k < T; ++k) {
      z.segment(static_cast<Eigen::Index>(k) * blk, n()) = x(t + k);
      z.segment(static_cast<Eigen::Index>(k) * blk + n(), d()) = u(t + k);
    }
    return z;
  }

  /// First t with ||x_t|| <= tol (or the stored length).
  [[nodiscard]] std::size_t settle_index(double tol) const {
    for (std::size_t t = 0; t < states.size(); ++t)
      if (states[t].norm() <= tol) return t;
    return states.size();
  }
};

struct LicqEntry {
  Eigen::Index t = 0;
  Eigen::Index rows = 0, cols = 0, rank = 0;
  double sigma_ratio = 0.0;  // sigma_min / sigma_max of M
  std::vector<Eigen::Index> active;
  std::vector<RowId> active_ids;
  bool pass = false;
};

struct LicqReport {
  int horizon = 0;
  std::vector<LicqEntry> entries;
  bool pass = true;

  [[nodiscard]] std::vector<Eigen::Index> failing_times() const {
    std::vector<Eigen::Index> out;
    for (const auto& e : entries)
      if (!e.pass) out.push_back(e.t);
    return out;
  }
};

inline LicqEntry licq_at(const ControlProblem& prob, const FixedPoint& fp, std::size_t t, int T, double rank_tol,
                         double tol_active) {
  const CompactProblem cp = build_compact(prob, fp.x(t), fp.x(t + static_cast<std::size_t>(T)), T);
  const SegmentSolution s = solve_segment(cp, static_cast<Eigen::Index>(t), tol_active);
  if (!s.ok())
    throw InvariantViolation("LICQ check: segment from t=" + std::to_string(t) + " is " + to_string(s.status) +
                             "; a fixed point must make its own segments feasible");
  const Mat M = build_M(cp, s.kkt.active);
  const RankInfo ri = numerical_rank(M, rank_tol);
  LicqEntry e;
  e.t = static_cast<Eigen::Index>(t);
  e.rows = M.rows();
  e.cols = M.cols();
  e.rank = ri.rank;
  e.sigma_ratio = ri.sigma_max > 0 ? ri.sigma_min / ri.sigma_max : 0.0;
  e.active = s.kkt.active;
  for (auto r : e.active) e.active_ids.push_back(row_identity(cp, r));
  e.pass = ri.rank == M.rows();
  return e;
}

/// Full-row-rank test of M for the segments (x_t, x_{t+N-1}) with T = N - 1,
/// for t in [t_begin, t_end). t_end defaults to the first index at which the
/// trajectory is inside the trunc_tol ball.
inline LicqReport check_licq(const ControlProblem& prob, const FixedPoint& fp, int N, std::size_t t_begin = 1,
                             std::optional<std::size_t> t_end = std::nullopt, double rank_tol = 1e-7,
                             double tol_active = 1e-6, double trunc_tol = 1e-8) {
  detail::require(N >= 2, "check_licq: horizon must be >= 2 (segment length N - 1 >= 1)");
  LicqReport rep;
  rep.horizon = N;
  const std::size_t end = t_end ? *t_end : fp.settle_index(trunc_tol);
  for (std::size_t t = t_begin; t < end; ++t) {
    rep.entries.push_back(licq_at(prob, fp, t, N - 1, rank_tol, tol_active));
    rep.pass = rep.pass && rep.entries.back().pass;
  }
  return rep;
}

struct ShiftReport {
  bool applicable = false;
  bool pass = false;
  bool active_match = false;
  double lambda_dev = 0.0;  // max over k = t+1..t+N
  double delta_dev = 0.0;   // max over steps t+1..t+N-1
  std::string note;
};

/// Overlap comparison of two consecutive T = N windows: lambda blocks for
/// absolute k = t+1..t+N, active sets and delta for steps t+1..t+N-1.
inline ShiftReport compare_shift(const CompactProblem& cp_t, const KktRecord& w0, const KktRecord& w1, int N,
                                 double tol = 1e-5) {
  ShiftReport r;
  r.applicable = true;
  r.active_match = true;
  for (int k = 1; k <= N; ++k) {
    r.lambda_dev = std::max(r.lambda_dev, (w0.lambda[static_cast<std::size_t>(k)] -
                                           w1.lambda[static_cast<std::size_t>(k - 1)]).lpNorm<Eigen::Infinity>());
  }
  const auto m = cp_t.rows_per_step();
  for (int k = 1; k <= N - 1; ++k) {
    if (w0.active_at_step(cp_t, k) != w1.active_at_step(cp_t, k - 1)) r.active_match = false;
    const Vec a = w0.delta.segment(k * m, m);
    const Vec b = w1.delta.segment((k - 1) * m, m);
    r.delta_dev = std::max(r.delta_dev, (a - b).lpNorm<Eigen::Infinity>());
  }
  r.pass = r.active_match && r.lambda_dev <= tol && r.delta_dev <= tol;
  return r;
}

struct ShiftWindows {
  CompactProblem cp0, cp1;
  SegmentSolution w0, w1;
  RankInfo rank0, rank1;
  bool licq = false;
};

/// Solves the T = N windows starting at t and t+1 on the fixed point.
inline ShiftWindows shift_windows(const ControlProblem& prob, const FixedPoint& fp, int N, std::size_t t,
                                  double rank_tol = 1e-7, double tol_active = 1e-6) {
  const auto NN = static_cast<std::size_t>(N);
  ShiftWindows w;
  w.cp0 = build_compact(prob, fp.x(t), fp.x(t + NN), N);
  w.cp1 = build_compact(prob, fp.x(t + 1), fp.x(t + 1 + NN), N);
  w.w0 = solve_segment(w.cp0, static_cast<Eigen::Index>(t), tol_active);
  w.w1 = solve_segment(w.cp1, static_cast<Eigen::Index>(t + 1), tol_active);
  if (!w.w0.ok() || !w.w1.ok())
    throw InvariantViolation("shift check: segment windows at t=" + std::to_string(t) + " are not solvable");
  const Mat M0 = build_M(w.cp0, w.w0.kkt.active);
  const Mat M1 = build_M(w.cp1, w.w1.kkt.active);
  w.rank0 = numerical_rank(M0, rank_tol);
  w.rank1 = numerical_rank(M1, rank_tol);
  w.licq = w.rank0.rank == M0.rows() && w.rank1.rank == M1.rows();
  return w;
}

/// Multiplier-shift identity between the windows at t and t+1. Not
/// applicable unless both windows satisfy LICQ (multipliers unique).
inline ShiftReport multiplier_shift_check(const ControlProblem& prob, const FixedPoint& fp, int N, std::size_t t,
                                          double tol = 1e-5) {
  const ShiftWindows w = shift_windows(prob, fp, N, t);
  if (!w.licq) {
    ShiftReport r;
    r.note = "LICQ fails on a window; multipliers not unique";
    return r;
  }
  return compare_shift(w.cp0, w.w0.kkt, w.w1.kkt, N, tol);
}

struct StitchReport {
  bool applicable = false;
  bool pass = false;
  double stationarity = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double primal = 0.0;
  std::vector<Vec> lambda;  // N + 2 stitched blocks
  Vec delta;
  std::string note;
};

/// Stitched multipliers over the (N+1)-step window from x_t: lambda for
/// k = t..t+N-1 and delta for steps t..t+N-1 from window t; lambda for
/// k = t+N, t+N+1 and delta for step t+N from window t+1. Checked against the
/// fixed-point trajectory on the T = N+1 compact problem.
inline StitchReport stitch_and_verify(const ControlProblem& prob, const FixedPoint& fp, int N, std::size_t t,
                                      double tol = 1e-5) {
  StitchReport r;
  const ShiftWindows w = shift_windows(prob, fp, N, t);
  if (!w.licq) {
    r.note = "LICQ fails on a window; not applicable";
    return r;
  }
  const ShiftReport sh = compare_shift(w.cp0, w.w0.kkt, w.w1.kkt, N, tol);
  if (!sh.pass) {
    r.note = "multiplier-shift identity fails; not applicable";
    return r;
  }
  r.applicable = true;
  const auto NN = static_cast<std::size_t>(N);
  const CompactProblem cp = build_compact(prob, fp.x(t), fp.x(t + NN + 1), N + 1);
  const Vec z = fp.segment_z(t, NN + 1);
  for (std::size_t k = 0; k < NN; ++k) r.lambda.push_back(w.w0.kkt.lambda[k]);
  r.lambda.push_back(w.w1.kkt.lambda[NN - 1]);
  r.lambda.push_back(w.w1.kkt.lambda[NN]);
  const auto m = cp.rows_per_step();
  r.delta = Vec::Zero(cp.F_in.rows());
  r.delta.head(static_cast<Eigen::Index>(NN) * m) = w.w0.kkt.delta;
  r.delta.tail(m) = w.w1.kkt.delta.tail(m);

  Vec lam(cp.G_eq.rows());
  for (std::size_t k = 0; k < r.lambda.size(); ++k) lam.segment(static_cast<Eigen::Index>(k) * cp.n, cp.n) = r.lambda[k];
  const Vec g = cp.G_eq.transpose() * lam + cp.F_in.transpose() * r.delta + 2.0 * cp.Q_T * z;
  r.stationarity = g.lpNorm<Eigen::Infinity>();
  const Vec slack = cp.F_in * z - cp.b_in;
  r.dual = std::max(0.0, -r.delta.minCoeff());
  r.complementarity = r.delta.cwiseProduct(slack).lpNorm<Eigen::Infinity>();
  r.primal = std::max((cp.G_eq * z - cp.b_eq).lpNorm<Eigen::Infinity>(), std::max(0.0, slack.maxCoeff()));
  r.pass = r.stationarity <= tol && r.dual <= 1e-10 && r.complementarity <= tol && r.primal <= tol;
  return r;
}

struct OracleSolution {
  Trajectory states;  // x_0 .. x_T (x_T = 0)
  Trajectory inputs;
  double cost = 0.0;
};

/// Long-horizon constrained LQR from x_S with the terminal state pinned to 0.
inline OracleSolution solve_long_horizon(const ControlProblem& prob, const Vec& x_S, int T_oracle = 300) {
  const CompactProblem cp = build_compact(prob, x_S, Vec::Zero(prob.n()), T_oracle);
  const SegmentSolution s = solve_segment(cp);
  if (!s.ok()) throw InfeasibleError("solve_long_horizon: x_S cannot be steered to the origin (" + to_string(s.status) + ")");
  OracleSolution o;
  const auto blk = cp.block();
  for (Eigen::Index k = 0; k < cp.T; ++k) {
    o.states.push_back(s.z.segment(k * blk, cp.n));
    o.inputs.push_back(s.z.segment(k * blk + cp.n, cp.d));
  }
  o.states.push_back(Vec::Zero(cp.n));
  o.cost = s.cost;
  return o;
}

inline double trajectory_cost(const StageCost& cost, const Trajectory& states, const Trajectory& inputs,
                              std::size_t from = 0) {
  double J = 0.0;
  for (std::size_t t = from; t < inputs.size(); ++t) J += stage_cost(cost, states[t], inputs[t]);
  return J;
}

struct SegmentCheck {
  std::size_t t = 0;
  int T = 0;
  double closed_loop = 0.0;
  double optimum = 0.0;
};

struct OptimalityVerdict {
  bool optimal = false;
  double state_deviation = 0.0;
  double cost = 0.0;
  double oracle_cost = 0.0;
  double gap = 0.0;       // J_inf - J*
  double rel_gap = 0.0;   // gap / J*
  double segment_gap = 0.0;  // max |closed-loop segment cost - segment optimum|
  std::vector<SegmentCheck> segments;
};

/// Compares the fixed point with the oracle and checks that sampled
/// segments of the fixed point are optimal for their fixed-endpoint problem.
inline OptimalityVerdict verify_optimality(const ControlProblem& prob, const FixedPoint& fp,
                                           const OracleSolution& oracle, double state_tol = 1e-3,
                                           double cost_rel_tol = 1e-4, std::size_t max_t = 10, int max_T = 0) {
  OptimalityVerdict v;
  const std::size_t len = std::max(fp.states.size(), oracle.states.size());
  for (std::size_t t = 0; t < len; ++t) {
    const Vec a = fp.x(t);
    const Vec b = t < oracle.states.size() ? oracle.states[t] : Vec(Vec::Zero(fp.n()));
    v.state_deviation = std::max(v.state_deviation, (a - b).lpNorm<Eigen::Infinity>());
  }
  v.cost = trajectory_cost(prob.cost, fp.states, fp.inputs);
  v.oracle_cost = oracle.cost;
  v.gap = v.cost - v.oracle_cost;
  v.rel_gap = v.gap / std::max(std::abs(v.oracle_cost), 1e-300);
  if (v.oracle_cost == 0.0 && v.cost == 0.0) v.rel_gap = 0.0;
  v.optimal = v.state_deviation <= state_tol && std::abs(v.rel_gap) <= cost_rel_tol;

  for (std::size_t t = 0; t <= max_t && t < fp.inputs.size(); ++t) {
    for (int T = 1; T <= max_T; ++T) {
      const CompactProblem cp = build_compact(prob, fp.x(t), fp.x(t + static_cast<std::size_t>(T)), T);
      const SegmentSolution s = solve_segment(cp);
      if (!s.ok()) continue;
      SegmentCheck sc;
      sc.t = t;
      sc.T = T;
      for (int k = 0; k < T; ++k)
        sc.closed_loop += stage_cost(prob.cost, fp.x(t + static_cast<std::size_t>(k)), fp.u(t + static_cast<std::size_t>(k)));
      sc.optimum = s.cost;
      v.segment_gap = std::max(v.segment_gap, std::abs(sc.closed_loop - sc.optimum));
      v.segments.push_back(sc);
    }
  }
  return v;
}

struct SuffixCheck {
  std::size_t t = 0;
  double closed_loop = 0.0;  // J^inf_{t->inf}(x_t)
  double optimum = 0.0;      // J*_{t->inf}(x_t)
  double rel_gap = 0.0;
};

inline SuffixCheck suffix_optimality(const ControlProblem& prob, const FixedPoint& fp, std::size_t t,
                                     int T_oracle = 300) {
  SuffixCheck s;
  s.t = t;
  s.closed_loop = trajectory_cost(prob.cost, fp.states, fp.inputs, t);
  s.optimum = solve_long_horizon(prob, fp.x(t), T_oracle).cost;
  s.rel_gap = (s.closed_loop - s.optimum) / std::max(std::abs(s.optimum), 1e-300);
  if (s.optimum == 0.0 && s.closed_loop == 0.0) s.rel_gap = 0.0;
  return s;
}

/// Aligned-column multiplier table: one line per lambda_{k|t}, then the
/// active inequality multipliers with their row identity.
inline void write_multiplier_table(std::ostream& os, const CompactProblem& cp, const KktRecord& rec) {
  char buf[160];
  os << "# multiplier            values\n";
  for (std::size_t k = 0; k < rec.lambda.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "lambda_{%ld|%ld}", static_cast<long>(rec.t0 + static_cast<Eigen::Index>(k)),
                  static_cast<long>(rec.t0));
    os << buf;
    for (Eigen::Index i = 0; i < rec.lambda[k].size(); ++i) {
      std::snprintf(buf, sizeof(buf), " %10.2f", rec.lambda[k][i]);
      os << buf;
    }
    os << '\n';
  }
  for (auto r : rec.active) {
    const RowId id = row_identity(cp, r);
    std::snprintf(buf, sizeof(buf), "delta_{%ld|%ld,%ld} %10.2f   (%s row %ld, step %ld)",
                  static_cast<long>(rec.t0 + id.step), static_cast<long>(rec.t0), static_cast<long>(id.index),
                  rec.delta[r], id.input ? "input" : "state", static_cast<long>(id.index),
                  static_cast<long>(rec.t0 + id.step));
    os << buf << '\n';
  }
}

}  // namespace lmpc

#endif  // LMPC_CERTIFY_HPP
