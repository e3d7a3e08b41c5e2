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
#ifndef LMPC_SAFESET_HPP
#define LMPC_SAFESET_HPP

// Sampled safe set: the convex hull of stored closed-loop states together
// with the realized cost-to-go of each stored state. The terminal cost used by
// the controller is the LP interpolation
//
//   V(x) = min  sum_i gamma_i c_i
//          s.t. sum_i gamma_i p_i = x,  sum_i gamma_i = 1,  gamma >= 0.

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <vector>

#include "lmpc/model.hpp"
#include "lmpc/polytope.hpp"
#include "lmpc/qp.hpp"

namespace lmpc {

inline constexpr double kTruncationTol = 1e-8;
inline constexpr double kDedupTol = 1e-9;

/// One stored closed-loop trajectory, truncated once it enters the
/// trunc_tol ball and closed with the origin at zero cost.
struct StoredTrajectory {
  Trajectory states;  // x_0 .. x_{L-1}, then the origin
  Trajectory inputs;  // u_0 .. u_{L-1}, then zero
  std::vector<double> cost_to_go;
  int iteration = 0;

  [[nodiscard]] double total_cost() const { return cost_to_go.empty() ? 0.0 : cost_to_go.front(); }
};

struct SafeSetPoint {
  Vec x;
  double cost = 0.0;
  int iteration = 0;
  int time = 0;
};

class SampledSafeSet {
 public:
  SampledSafeSet() = default;

  /// CS = {0}, V = 0 on it.
  static SampledSafeSet origin_only(Eigen::Index n, int iteration = 0) {
    SampledSafeSet ss;
    ss.n_ = n;
    ss.points_.push_back({Vec::Zero(n), 0.0, iteration, 0});
    return ss;
  }

  [[nodiscard]] bool empty() const { return points_.empty(); }
  [[nodiscard]] Eigen::Index dim() const { return n_; }
  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] const std::vector<SafeSetPoint>& points() const { return points_; }
  [[nodiscard]] const std::vector<StoredTrajectory>& trajectories() const { return trajectories_; }

  /// Stored states as columns.
  [[nodiscard]] Mat point_matrix() const {
    Mat P(n_, static_cast<Eigen::Index>(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) P.col(static_cast<Eigen::Index>(i)) = points_[i].x;
    return P;
  }

  [[nodiscard]] Vec cost_vector() const {
    Vec c(static_cast<Eigen::Index>(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) c[static_cast<Eigen::Index>(i)] = points_[i].cost;
    return c;
  }

 private:
  friend SampledSafeSet add_trajectory(const SampledSafeSet&, const StageCost&, const Trajectory&, const Trajectory&,
                                       int, double);
  Eigen::Index n_ = 0;
  std::vector<SafeSetPoint> points_;
  std::vector<StoredTrajectory> trajectories_;
};

/// Truncates (states, inputs) at the first index where both ||x_t|| and
/// ||u_t|| fall below trunc_tol and computes the cost-to-go by backward
/// summation. Throws DivergenceError if the trajectory never gets there.
inline StoredTrajectory truncate_trajectory(const StageCost& cost, const Trajectory& states, const Trajectory& inputs,
                                            int iteration = 0, double trunc_tol = kTruncationTol) {
  detail::require(!states.empty(), "truncate_trajectory: no states");
  detail::require(inputs.size() + 1 >= states.size(), "truncate_trajectory: fewer inputs than transitions");
  const Eigen::Index n = states.front().size();
  const Eigen::Index d = cost.R().rows();

  std::size_t stop = states.size();
  for (std::size_t t = 0; t < states.size(); ++t) {
    const double un = t < inputs.size() ? inputs[t].norm() : 0.0;
    if (states[t].norm() <= trunc_tol && un <= trunc_tol) {
      stop = t;
      break;
    }
  }
  if (stop == states.size()) {
    throw DivergenceError("trajectory does not reach the ||x|| <= " + std::to_string(trunc_tol) + " ball (final norm " +
                          std::to_string(states.back().norm()) + ")");
  }

  StoredTrajectory tr;
  tr.iteration = iteration;
  tr.states.assign(states.begin(), states.begin() + static_cast<std::ptrdiff_t>(stop));
  tr.inputs.assign(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(stop));
  tr.states.push_back(Vec::Zero(n));
  tr.inputs.push_back(Vec::Zero(d));
  tr.cost_to_go.assign(tr.states.size(), 0.0);
  double acc = 0.0;
  for (std::size_t t = stop; t-- > 0;) {
    acc += stage_cost(cost, tr.states[t], tr.inputs[t]);
    tr.cost_to_go[t] = acc;
  }
  return tr;
}

/// Functional update: returns a new safe set with the truncated trajectory
/// folded in. Points within kDedupTol (inf-norm) of an existing point are
/// merged, keeping the smaller cost.
inline SampledSafeSet add_trajectory(const SampledSafeSet& ss, const StageCost& cost, const Trajectory& states,
                                     const Trajectory& inputs, int iteration = 0,
                                     double trunc_tol = kTruncationTol) {
  StoredTrajectory tr = truncate_trajectory(cost, states, inputs, iteration, trunc_tol);
  SampledSafeSet out = ss;
  if (out.n_ == 0) out.n_ = tr.states.front().size();
  detail::require(out.n_ == tr.states.front().size(), "add_trajectory: state dimension mismatch");

  for (std::size_t t = 0; t < tr.states.size(); ++t) {
    const Vec& x = tr.states[t];
    bool merged = false;
    for (auto& p : out.points_) {
      if ((p.x - x).lpNorm<Eigen::Infinity>() <= kDedupTol) {
        if (tr.cost_to_go[t] < p.cost) {
          p.cost = tr.cost_to_go[t];
          p.iteration = iteration;
          p.time = static_cast<int>(t);
        }
        merged = true;
        break;
      }
    }
    if (!merged) out.points_.push_back({x, tr.cost_to_go[t], iteration, static_cast<int>(t)});
  }
  out.trajectories_.push_back(std::move(tr));
  return out;
}

struct SafeSetValue {
  double value = 0.0;
  Vec gamma;  // weights over SampledSafeSet::points()
};

/// V(x). Returns nullopt when x is outside the convex hull of stored points.
inline std::optional<SafeSetValue> value(const SampledSafeSet& ss, const Vec& x) {
  detail::require(!ss.empty(), "value: empty safe set");
  detail::require(x.size() == ss.dim(), "value: dimension mismatch");
  const Mat P = ss.point_matrix();
  const auto np = P.cols();
  const auto n = P.rows();
  Mat Aeq(n + 1, np);
  Aeq.topRows(n) = P;
  Aeq.row(n).setOnes();
  Vec beq(n + 1);
  beq.head(n) = x;
  beq[n] = 1.0;
  const Mat Ain = -Mat::Identity(np, np);
  QpSettings st = lp_settings();
  st.vertex = false;
  const QpSolution s = solve_lp(ss.cost_vector(), Aeq, beq, Ain, Vec::Zero(np), st);
  if (s.status == QpStatus::infeasible) return std::nullopt;
  if (!s.ok()) throw Error("value: LP failed with status " + to_string(s.status));
  return SafeSetValue{s.objective, s.z.cwiseMax(0.0)};
}

/// Membership in the convex hull of stored points, within tol (1 + |x|_inf).
/// Planar sets use the exact hull; otherwise the dual of the elastic LP
///   max a'x - b  s.t.  a'p_i <= b, |a|_inf <= 1
/// whose optimum is the l1 distance from x to the hull.
inline bool contains(const SampledSafeSet& ss, const Vec& x, double tol = 1e-7) {
  detail::require(!ss.empty(), "contains: empty safe set");
  detail::require(x.size() == ss.dim(), "contains: dimension mismatch");
  const double tol_x = tol * (1.0 + x.lpNorm<Eigen::Infinity>());
  if (ss.dim() == 2) {
    std::vector<Vec> pts;
    for (const auto& p : ss.points()) pts.push_back(p.x);
    return polygon_contains(convex_hull_2d(std::move(pts), 1e-12), x, tol_x);
  }
  const Mat P = ss.point_matrix();
  const auto np = P.cols();
  const auto n = P.rows();
  Mat Ain = Mat::Zero(np + 2 * n, n + 1);
  Ain.topLeftCorner(np, n) = P.transpose();
  Ain.block(0, n, np, 1).setConstant(-1.0);
  Ain.block(np, 0, n, n) = Mat::Identity(n, n);
  Ain.block(np + n, 0, n, n) = -Mat::Identity(n, n);
  Vec bin = Vec::Zero(np + 2 * n);
  bin.tail(2 * n).setOnes();
  Vec f(n + 1);
  f.head(n) = -x;
  f[n] = 1.0;
  QpSettings st = lp_settings();
  st.vertex = false;
  const QpSolution s = solve_lp(f, Mat(0, n + 1), Vec(0), Ain, bin, st);
  if (!s.ok()) throw Error("contains: separation LP failed with status " + to_string(s.status));
  return -s.objective <= tol_x;
}

/// Text dump, one point per line: x_1 .. x_n cost iteration t.
inline void write_safe_set(std::ostream& os, const SampledSafeSet& ss) {
  os << "#";
  for (Eigen::Index i = 0; i < ss.dim(); ++i) os << " x" << (i + 1);
  os << " cost iteration t\n";
  char buf[64];
  for (const auto& p : ss.points()) {
    for (Eigen::Index i = 0; i < p.x.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.12e ", p.x[i]);
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.12e", p.cost);
    os << buf << ' ' << p.iteration << ' ' << p.time << '\n';
  }
}

}  // namespace lmpc

#endif  // LMPC_SAFESET_HPP
