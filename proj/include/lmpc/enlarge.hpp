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
#ifndef LMPC_ENLARGE_HPP
#define LMPC_ENLARGE_HPP

// Region of attraction of the learned policy and its iterative enlargement
// from a safe set that initially holds only the origin.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lmpc/controller.hpp"
#include "lmpc/polytope.hpp"
#include "lmpc/safeset.hpp"

namespace lmpc {

enum class RoaMode { exact, directional, baseline };

inline std::string to_string(RoaMode m) {
  switch (m) {
    case RoaMode::exact: return "exact";
    case RoaMode::directional: return "directional";
    case RoaMode::baseline: return "baseline";
  }
  return "unknown";
}

struct RoaResult {
  std::vector<Vec> vertices;  // counter-clockwise
  RoaMode mode = RoaMode::exact;
  int iteration = 0;          // safe-set iteration the set was computed from
  int directions_used = 0;
};

/// Lifted feasibility set of the finite-time problem with x_0 free:
/// variables (x_0..x_N, u_0..u_{N-1}, gamma), x_0 in the first n slots.
struct LiftedRoa {
  Mat A_eq;
  Vec b_eq;
  Mat A_in;
  Vec b_in;
  Eigen::Index nv = 0;
};

inline LiftedRoa lift_roa(const ControlProblem& prob, const SampledSafeSet& ss, int N) {
  if (ss.empty()) throw EmptySetError("region of attraction: empty safe set");
  const Ftocp f = build_ftocp(prob, ss, Vec::Zero(prob.n()), N);
  const auto n = prob.n();
  LiftedRoa L;
  L.nv = f.layout.size();
  L.A_eq = f.qp.A_eq.bottomRows(f.qp.A_eq.rows() - n);
  L.b_eq = f.qp.b_eq.tail(f.qp.b_eq.size() - n);
  const auto& c = prob.cons;
  L.A_in = Mat::Zero(f.qp.A_in.rows() + c.mx(), L.nv);
  L.A_in.topRows(f.qp.A_in.rows()) = f.qp.A_in;
  L.A_in.bottomLeftCorner(c.mx(), n) = c.F_x;
  L.b_in.resize(L.A_in.rows());
  L.b_in << f.qp.b_in, c.b_x;
  return L;
}

/// Maximizer of d'x_0 over the lifted set, with optional extra equality
/// rows on x_0. nullopt if infeasible.
inline std::optional<Vec> lifted_support(const LiftedRoa& L, Eigen::Index n, const Vec& d,
                                         const Mat& E = Mat(0, 0), const Vec& e = Vec(0)) {
  Vec c = Vec::Zero(L.nv);
  c.head(n) = -d;
  Mat Aeq = L.A_eq;
  Vec beq = L.b_eq;
  if (E.rows() > 0) {
    Aeq.conservativeResize(L.A_eq.rows() + E.rows(), Eigen::NoChange);
    Aeq.bottomRows(E.rows()).setZero();
    Aeq.bottomLeftCorner(E.rows(), n) = E;
    beq.conservativeResize(L.b_eq.size() + e.size());
    beq.tail(e.size()) = e;
  }
  // Face-interior maximizers are fine here: refinement around them finds the
  // adjacent vertices and the final hull drops collinear points.
  QpSettings st = lp_settings();
  st.vertex = false;
  const QpSolution s = solve_lp(c, Aeq, beq, L.A_in, L.b_in, st);
  if (s.status == QpStatus::infeasible) return std::nullopt;
  if (!s.ok()) throw Error("lifted support LP failed with status " + to_string(s.status));
  return Vec(s.z.head(n));
}

struct RoaSettings {
  double vertex_tol = 1e-6;
  int max_directions = 512;
  int initial_directions = 16;
};

/// Exact region of attraction (n = 2) by adaptive support sampling of the
/// lifted feasibility set: adjacent directions are refined along the chord
/// normal until no support point lies more than vertex_tol beyond a chord.
inline RoaResult compute_roa_2d(const ControlProblem& prob, const SampledSafeSet& ss, int N,
                                const RoaSettings& st = {}) {
  detail::require(prob.n() == 2, "compute_roa_2d: state dimension must be 2");
  detail::require(N >= 1, "compute_roa_2d: horizon must be >= 1");
  const LiftedRoa L = lift_roa(prob, ss, N);
  struct Sample {
    double angle;
    Vec p;
  };
  auto sample = [&](double a) {
    const Vec d = Eigen::Vector2d(std::cos(a), std::sin(a));
    const auto p = lifted_support(L, 2, d);
    if (!p) throw EmptySetError("compute_roa_2d: region of attraction is empty");
    return Sample{a, *p};
  };
  std::vector<Sample> s;
  for (int i = 0; i < st.initial_directions; ++i) s.push_back(sample(2.0 * std::numbers::pi * i / st.initial_directions));
  int used = st.initial_directions;

  bool refined = true;
  while (refined && used < st.max_directions) {
    refined = false;
    std::vector<Sample> next;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Sample& a = s[i];
      const Sample& b = s[(i + 1) % s.size()];
      next.push_back(a);
      const Vec chord = b.p - a.p;
      if (chord.norm() <= st.vertex_tol || used >= st.max_directions) continue;
      double ang = std::atan2(-chord[0], chord[1]);  // outward normal of a -> b
      // keep the new direction between the two parents
      double lo = a.angle, hi = b.angle;
      if (hi <= lo) hi += 2.0 * std::numbers::pi;
      while (ang < lo) ang += 2.0 * std::numbers::pi;
      while (ang > hi) ang -= 2.0 * std::numbers::pi;
      if (ang <= lo || ang >= hi) continue;
      const Sample m = sample(ang);
      ++used;
      const Vec nrm = Eigen::Vector2d(std::cos(ang), std::sin(ang));
      if (nrm.dot(m.p - a.p) > st.vertex_tol) {
        next.push_back(m);
        refined = true;
      }
    }
    s = std::move(next);
  }

  std::vector<Vec> pts;
  for (const auto& x : s) pts.push_back(x.p);
  RoaResult r;
  r.vertices = convex_hull_2d(pts, st.vertex_tol);
  r.mode = RoaMode::exact;
  r.directions_used = used;
  return r;
}

/// Extreme point of the region of attraction along d on the line
/// d_perp'x = 0. nullopt when the line misses the region.
inline std::optional<Vec> directional_extreme(const ControlProblem& prob, const SampledSafeSet& ss, int N,
                                              const Vec& d, const Vec& d_perp) {
  detail::require(d.size() == prob.n() && d_perp.size() == prob.n(), "directional_extreme: dimension mismatch");
  detail::require(d.norm() > 0.0, "directional_extreme: direction must be nonzero");
  detail::require(std::abs(d.dot(d_perp)) <= 1e-10 * std::max(1.0, d.norm() * d_perp.norm()),
                  "directional_extreme: d_perp must be orthogonal to d");
  const LiftedRoa L = lift_roa(prob, ss, N);
  return lifted_support(L, prob.n(), d, d_perp.transpose(), Vec::Zero(1));
}

/// 90-degree rotation of a planar direction.
inline Vec rotate90(const Vec& d) {
  detail::require(d.size() == 2, "rotate90: planar direction required");
  return Eigen::Vector2d(-d[1], d[0]);
}

struct EnlargementSchedule {
  int M = 1;
  RoaMode mode = RoaMode::exact;
  std::vector<Vec> directions;  // directional mode; normalized on use
  bool per_vertex_update = true;
  RoaSettings roa;

  void validate() const {
    detail::require(M >= 0, "EnlargementSchedule: M must be >= 0");
    detail::require(mode != RoaMode::baseline, "EnlargementSchedule: mode must be exact or directional");
    if (mode == RoaMode::directional) {
      detail::require(!directions.empty(), "EnlargementSchedule: directional mode needs directions");
      for (const auto& d : directions) detail::require(d.norm() > 0.0, "EnlargementSchedule: zero direction");
    }
  }
};

struct SeedRecord {
  int step = 0;
  Vec seed;             // initial state actually simulated
  double shrink = 0.0;  // seed = (1 - shrink) * region vertex
  bool skipped = false; // already inside the convex safe set
  bool failed = false;
  std::string diagnostic;
  double cost = 0.0;
};

struct EnlargementResult {
  SampledSafeSet safe_set;
  std::vector<RoaResult> roas;  // roas[i]: region from the safe set after i outer steps
  std::vector<SeedRecord> seeds;
};

/// Domain enlargement from CS = {0}: each outer step computes seeds (RoA
/// vertices, or directional extremes), runs the closed loop from each and
/// folds the trajectory into the safe set, either after every seed or once
/// per outer step.
inline EnlargementResult run_enlargement(const ControlProblem& prob, const EnlargementSchedule& sched, int N,
                                         const LmpcConfig& cfg_in = {}) {
  sched.validate();
  LmpcConfig cfg = cfg_in;
  cfg.horizon = N;
  cfg.validate();
  EnlargementResult out;
  out.safe_set = SampledSafeSet::origin_only(prob.n());
  auto region = [&](int step) {
    RoaResult r = compute_roa_2d(prob, out.safe_set, N, sched.roa);
    r.iteration = step;
    return r;
  };
  out.roas.push_back(region(0));
  int traj_index = 0;
  for (int i = 1; i <= sched.M; ++i) {
    std::vector<Vec> seeds;
    if (sched.mode == RoaMode::exact) {
      seeds = out.roas.back().vertices;
    } else {
      for (const auto& d0 : sched.directions) {
        const Vec d = d0.normalized();
        if (auto v = directional_extreme(prob, out.safe_set, N, d, rotate90(d))) seeds.push_back(*v);
      }
    }
    const SampledSafeSet snapshot = out.safe_set;
    for (const auto& v : seeds) {
      SeedRecord rec;
      rec.step = i;
      rec.seed = v;
      const SampledSafeSet& policy_set = sched.per_vertex_update ? out.safe_set : snapshot;
      if (contains(policy_set, v)) {
        rec.skipped = true;
        out.seeds.push_back(rec);
        continue;
      }
      // Seeds lie on the region boundary up to LP accuracy, where the
      // finite-time problem has no interior; on failure the seed is pulled
      // toward the origin (interior of the region) by a relative eps.
      for (double eps : {0.0, 1e-9, 1e-7, 1e-5}) {
        const Vec x0 = (1.0 - eps) * v;
        try {
          const IterationRecord it = run_iteration(prob, policy_set, x0, cfg, traj_index + 1);
          ++traj_index;
          rec.seed = x0;
          rec.shrink = eps;
          rec.cost = it.cost;
          rec.failed = false;
          out.safe_set = add_trajectory(out.safe_set, prob.cost, it.states, it.inputs, traj_index, cfg.trunc_tol);
          break;
        } catch (const Error& e) {
          rec.failed = true;
          rec.diagnostic = e.what();
        }
      }
      out.seeds.push_back(rec);
    }
    out.roas.push_back(region(i));
  }
  return out;
}

/// Region of attraction of the standard MPC with terminal set O_inf of the
/// LQR controller: N-fold Pre of O_inf within the constraints.
inline RoaResult baseline_mpc_roa(const ControlProblem& prob, int N, Polyhedron* o_inf_out = nullptr) {
  detail::require(prob.n() == 2, "baseline_mpc_roa: state dimension must be 2");
  const LqrSolution lqr = riccati_lqr(prob.sys, prob.cost);
  const InvariantSetResult oinf = max_pos_invariant(prob.sys, lqr.K, prob.cons);
  if (!oinf.converged) throw ResourceError("baseline_mpc_roa: O_inf iteration did not converge");
  Polyhedron P = oinf.set;
  if (o_inf_out) *o_inf_out = P;
  for (int k = 0; k < N; ++k) P = pre_set(P, prob.sys, prob.cons);
  RoaResult r;
  r.vertices = vertices_2d(P);
  r.mode = RoaMode::baseline;
  return r;
}

}  // namespace lmpc

#endif  // LMPC_ENLARGE_HPP
