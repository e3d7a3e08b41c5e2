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
#ifndef LMPC_QP_HPP
#define LMPC_QP_HPP

// Dense-interface convex QP/LP solver.
//
//   minimize    z' H z + f' z
//   subject to  A_eq z  = b_eq
//               A_in z <= b_in
//
// Multiplier convention (matches the KKT block used throughout the
// certification code):
//
//   A_eq' lambda + A_in' delta = -(2 H z + f),   delta >= 0.
//
// Method: Mehrotra predictor-corrector interior point on the sparse
// quasi-definite KKT system, followed by an active-set polish step that
// re-solves the equality-constrained QP on the identified active set. The
// polished point carries exact multipliers (zero on inactive rows). For
// LPs an optional purification step walks along the optimal face to a
// vertex. Failed solves are classified with an elastic phase-1 LP
// (infeasible) and a recession-direction LP (unbounded).

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lmpc/types.hpp"

namespace lmpc {

struct QpProblem {
  Mat H;  // n x n, symmetric PSD; may be empty (LP)
  Vec f;
  Mat A_eq;
  Vec b_eq;
  Mat A_in;
  Vec b_in;

  [[nodiscard]] Eigen::Index num_vars() const { return f.size(); }
};

enum class QpStatus { optimal, infeasible, unbounded, max_iter };

inline std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::infeasible:
      return "infeasible";
    case QpStatus::unbounded:
      return "unbounded";
    case QpStatus::max_iter:
      return "max-iter";
  }
  return "unknown";
}

struct QpSolution {
  QpStatus status = QpStatus::max_iter;
  Vec z;
  Vec lambda;
  Vec delta;
  std::vector<Eigen::Index> active;  // rows of A_in with A_in z = b_in
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool polished = false;

  [[nodiscard]] bool ok() const { return status == QpStatus::optimal; }
};

struct QpSettings {
  double tol = 1e-10;         // relative IPM stopping tolerance
  int max_iter = 150;
  double tol_active = 1e-6;   // |A_in z - b_in|_i <= tol_active (1 + |b_i|)
  bool polish = true;
  bool vertex = false;        // LPs only: return a vertex of the optimal face
  bool classify = true;       // run the infeasible/unbounded diagnostics
  bool check_psd = true;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_in = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  [[nodiscard]] double max() const {
    return std::max({stationarity, primal_eq, primal_in, dual, complementarity});
  }
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;

inline double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Shape-normalized copy of the problem: empty matrices get the right column
// count, H is symmetrized and doubled (so the gradient is H2 z + f).
struct NormalizedQp {
  Eigen::Index n = 0, me = 0, mi = 0;
  SpMat H2, Aeq, Ain;
  Vec f, beq, bin;
  bool is_lp = true;
};

inline NormalizedQp normalize(const QpProblem& p, bool check_psd) {
  NormalizedQp q;
  q.n = p.f.size();
  require(q.n > 0, "qp: problem has no variables");
  const auto n = q.n;

  Mat H = p.H.size() == 0 ? Mat::Zero(n, n) : p.H;
  require(H.rows() == n && H.cols() == n, "qp: H is " + dims(H) + ", expected square of size " + std::to_string(n));
  require(H.allFinite() && p.f.allFinite(), "qp: non-finite cost data");
  H = 0.5 * (H + H.transpose());
  q.is_lp = H.cwiseAbs().maxCoeff() == 0.0;

  if (check_psd && !q.is_lp) {
    // Sampled Rayleigh quotients with a fixed seed; diagonal first.
    const double scale = 1.0 + H.cwiseAbs().maxCoeff();
    require(H.diagonal().minCoeff() >= -1e-9 * scale, "qp: H is not positive semidefinite");
    std::mt19937 gen(12345);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 8; ++k) {
      Vec v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = nd(gen);
      require(v.dot(H * v) >= -1e-9 * scale * v.squaredNorm(), "qp: H is not positive semidefinite");
    }
  }

  auto fit = [n](const Mat& A, const Vec& b, const char* name) {
    if (A.rows() == 0 && b.size() == 0) return Mat(0, n);
    require(A.cols() == n, std::string("qp: ") + name + " has " + std::to_string(A.cols()) + " columns, expected " +
                               std::to_string(n));
    require(A.rows() == b.size(), std::string("qp: ") + name + " rows do not match its right-hand side");
    require(A.allFinite() && b.allFinite(), std::string("qp: non-finite data in ") + name);
    return A;
  };
  const Mat Aeq = fit(p.A_eq, p.b_eq, "A_eq");
  const Mat Ain = fit(p.A_in, p.b_in, "A_in");

  q.me = Aeq.rows();
  q.mi = Ain.rows();
  q.H2 = (2.0 * H).sparseView();
  q.Aeq = Aeq.sparseView();
  q.Ain = Ain.sparseView();
  q.f = p.f;
  q.beq = q.me ? p.b_eq : Vec(0);
  q.bin = q.mi ? p.b_in : Vec(0);
  return q;
}

// Quasi-definite system
//   [ W + rho I   C'      ] [x]   [r1]
//   [ C          -rho I   ] [y] = [r2]
// factorized with LDL' and iteratively refined against rho = 0.
class QuasiDefiniteSolver {
 public:
  bool factor(const SpMat& W, const SpMat& C, double rho) {
    W_ = W;
    C_ = C;
    const Eigen::Index n = W.rows(), m = C.rows();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(W.nonZeros() + 2 * C.nonZeros() + n + m));
    for (Eigen::Index k = 0; k < W.outerSize(); ++k)
      for (SpMat::InnerIterator it(W, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index k = 0; k < C.outerSize(); ++k)
      for (SpMat::InnerIterator it(C, k); it; ++it) {
        trip.emplace_back(n + it.row(), it.col(), it.value());
        trip.emplace_back(it.col(), n + it.row(), it.value());
      }
    for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, rho);
    for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, -rho);
    SpMat K(n + m, n + m);
    K.setFromTriplets(trip.begin(), trip.end());
    ldlt_.compute(K);
    return ldlt_.info() == Eigen::Success;
  }

  [[nodiscard]] Vec apply_exact(const Vec& x) const {
    const Eigen::Index n = W_.rows();
    const Eigen::Index m = C_.rows();
    Vec out(n + m);
    out.head(n) = W_ * x.head(n);
    if (m) {
      out.head(n) += C_.transpose() * x.tail(m);
      out.tail(m) = C_ * x.head(n);
    }
    return out;
  }

  [[nodiscard]] Vec solve(const Vec& rhs, int refine = 8) const {
    Vec x = ldlt_.solve(rhs);
    const double scale = 1.0 + inf_norm(rhs);
    for (int k = 0; k < refine; ++k) {
      const Vec r = rhs - apply_exact(x);
      if (inf_norm(r) <= 1e-15 * scale) break;
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  SpMat W_, C_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

struct IpmIterate {
  Vec z, lam, del, s;
  int iterations = 0;
  bool converged = false;
};

inline double max_step(const Vec& v, const Vec& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

inline IpmIterate interior_point(const NormalizedQp& q, const QpSettings& st) {
  const auto n = q.n, me = q.me, mi = q.mi;
  IpmIterate it;
  it.z = Vec::Zero(n);
  it.lam = Vec::Zero(me);
  it.s = Vec::Ones(mi);
  it.del = Vec::Ones(mi);
  if (mi) it.s = (q.bin - q.Ain * it.z).cwiseMax(1.0);

  const double scale_p = 1.0 + std::max(inf_norm(q.beq), inf_norm(q.bin));
  const double rho = 1e-10;
  const SpMat AinT = q.Ain.transpose();
  QuasiDefiniteSolver kkt;
  int small_steps = 0;
  double best_res = std::numeric_limits<double>::infinity();
  int no_progress = 0;
  // Best iterate by KKT merit; returned when the method stalls so that the
  // active-set refinement can still finish from it.
  IpmIterate best = it;
  double best_merit = std::numeric_limits<double>::infinity();
  auto stalled = [&]() {
    best.iterations = it.iterations;
    return best;
  };

  for (int k = 0; k < st.max_iter; ++k) {
    it.iterations = k;
    const Vec Hz = q.H2 * it.z;
    Vec rd = Hz + q.f;
    if (me) rd += q.Aeq.transpose() * it.lam;
    if (mi) rd += AinT * it.del;
    const Vec re = me ? Vec(q.Aeq * it.z - q.beq) : Vec(0);
    const Vec ri = mi ? Vec(q.Ain * it.z + it.s - q.bin) : Vec(0);
    const double gap = mi ? it.s.dot(it.del) : 0.0;
    const double mu = mi ? gap / static_cast<double>(mi) : 0.0;

    const double obj = 0.5 * it.z.dot(Hz) + q.f.dot(it.z);
    double scale_d = 1.0 + std::max(inf_norm(q.f), inf_norm(Hz));
    if (me) scale_d = std::max(scale_d, 1.0 + inf_norm(q.Aeq.transpose() * it.lam));
    if (mi) scale_d = std::max(scale_d, 1.0 + inf_norm(AinT * it.del));
    const double pres = std::max(inf_norm(re), inf_norm(ri));
    const double dres = inf_norm(rd);
    if (pres <= st.tol * scale_p && dres <= st.tol * scale_d && gap <= st.tol * (1.0 + std::abs(obj))) {
      it.converged = true;
      return it;
    }

    const double merit = std::max(std::max(pres / scale_p, dres / scale_d), gap / (1.0 + std::abs(obj)));
    if (merit < best_merit && it.z.allFinite()) {
      best_merit = merit;
      best = it;
    }
    const double res = std::max(pres / scale_p, dres / scale_d);
    if (res < 0.5 * best_res) {
      best_res = res;
      no_progress = 0;
    } else if (mi == 0 && ++no_progress > 3) {
      return stalled();
    }
    if (inf_norm(it.z) > 1e13 || (mi && inf_norm(it.del) > 1e13) || (me && inf_norm(it.lam) > 1e13)) return stalled();

    const Vec d = mi ? Vec(it.del.cwiseQuotient(it.s)) : Vec(0);
    SpMat W = q.H2;
    if (mi) W += SpMat(AinT * d.asDiagonal() * q.Ain);
    // Optimal faces of LPs drive W toward singularity; grow the proximal
    // term until LDL' succeeds (refinement restores accuracy).
    const double wmax = W.nonZeros() ? W.coeffs().cwiseAbs().maxCoeff() : 1.0;
    bool factored = false;
    for (double r = rho; r <= 1e-4 * (1.0 + wmax); r *= 100.0) {
      if ((factored = kkt.factor(W, q.Aeq, r))) break;
    }
    if (!factored) return stalled();

    auto direction = [&](const Vec& rc, Vec& dz, Vec& dl, Vec& ds, Vec& dd) {
      Vec rhs(n + me);
      rhs.head(n) = -rd;
      if (mi) rhs.head(n) -= AinT * (it.del.cwiseProduct(ri) - rc).cwiseQuotient(it.s);
      if (me) rhs.tail(me) = -re;
      const Vec sol = kkt.solve(rhs);
      dz = sol.head(n);
      dl = sol.tail(me);
      if (mi) {
        ds = -ri - q.Ain * dz;
        dd = (-rc - it.del.cwiseProduct(ds)).cwiseQuotient(it.s);
      }
    };

    Vec dz, dl, ds, dd;
    double alpha = 1.0;
    if (mi) {
      const Vec rc_aff = it.s.cwiseProduct(it.del);
      direction(rc_aff, dz, dl, ds, dd);
      const double a_aff = std::min(max_step(it.s, ds), max_step(it.del, dd));
      const double mu_aff = (it.s + a_aff * ds).dot(it.del + a_aff * dd) / static_cast<double>(mi);
      const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
      const Vec rc = rc_aff + ds.cwiseProduct(dd) - Vec::Constant(mi, sigma * mu);
      direction(rc, dz, dl, ds, dd);
      alpha = std::min(1.0, 0.99 * std::min(max_step(it.s, ds), max_step(it.del, dd)));
    } else {
      direction(Vec(0), dz, dl, ds, dd);
    }

    small_steps = alpha < 1e-8 ? small_steps + 1 : 0;
    if (small_steps >= 3) return stalled();

    it.z += alpha * dz;
    if (me) it.lam += alpha * dl;
    if (mi) {
      it.s += alpha * ds;
      it.del += alpha * dd;
      // keep strictly interior under round-off
      it.s = it.s.cwiseMax(1e-300);
      it.del = it.del.cwiseMax(1e-300);
    }
  }
  it.iterations = st.max_iter;
  return stalled();
}

inline double objective_of(const NormalizedQp& q, const Vec& z) { return 0.5 * z.dot(q.H2 * z) + q.f.dot(z); }

inline KktResiduals residuals(const NormalizedQp& q, const Vec& z, const Vec& lam, const Vec& del) {
  KktResiduals r;
  Vec g = q.H2 * z + q.f;
  if (q.me) {
    g += q.Aeq.transpose() * lam;
    r.primal_eq = inf_norm(q.Aeq * z - q.beq);
  }
  if (q.mi) {
    g += q.Ain.transpose() * del;
    const Vec slack = q.Ain * z - q.bin;
    r.primal_in = std::max(0.0, slack.maxCoeff());
    r.dual = std::max(0.0, -del.minCoeff());
    r.complementarity = inf_norm(del.cwiseProduct(slack));
  }
  r.stationarity = inf_norm(g);
  return r;
}

// Active-set refinement from the IPM point. Each pass solves the
// equality-constrained problem on the working set, then adds every violated
// inactive row, or failing that drops the most negative multiplier. Accepts
// only a point that is primal and dual feasible to near machine precision.
inline bool polish(const NormalizedQp& q, IpmIterate& it, std::vector<Eigen::Index> act, Vec& del_out,
                   int max_passes = 60) {
  const auto n = q.n, me = q.me;
  const double scale_p = 1.0 + std::max(inf_norm(q.beq), inf_norm(q.bin));
  double scale_d = 1.0 + std::max(inf_norm(q.f), inf_norm(q.H2 * it.z));
  if (q.mi) scale_d = std::max(scale_d, 1.0 + inf_norm(q.Ain.transpose() * it.del));
  const double tol_p = 1e-13 * scale_p;
  const double tol_d = 1e-13 * scale_d;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = q.Ain;

  for (int pass = 0; pass < max_passes; ++pass) {
    std::sort(act.begin(), act.end());
    const auto na = static_cast<Eigen::Index>(act.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index k = 0; k < q.Aeq.outerSize(); ++k)
      for (SpMat::InnerIterator e(q.Aeq, k); e; ++e) trip.emplace_back(e.row(), e.col(), e.value());
    for (Eigen::Index r = 0; r < na; ++r)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator e(rows, act[static_cast<std::size_t>(r)]); e; ++e)
        trip.emplace_back(me + r, e.col(), e.value());
    SpMat C(me + na, n);
    C.setFromTriplets(trip.begin(), trip.end());
    Vec b(me + na);
    if (me) b.head(me) = q.beq;
    for (Eigen::Index r = 0; r < na; ++r) b[me + r] = q.bin[act[static_cast<std::size_t>(r)]];

    QuasiDefiniteSolver kkt;
    if (!kkt.factor(q.H2, C, 1e-10)) return false;
    Vec x0(n + me + na);
    x0.head(n) = it.z;
    x0.segment(n, me) = it.lam;
    for (Eigen::Index r = 0; r < na; ++r) x0[n + me + r] = it.del[act[static_cast<std::size_t>(r)]];
    Vec rhs(n + me + na);
    rhs.head(n) = -q.f;
    rhs.tail(me + na) = b;
    Vec x = x0;
    for (int k = 0; k < 30; ++k) {
      const Vec r = rhs - kkt.apply_exact(x);
      if (inf_norm(r) <= 1e-15 * (1.0 + inf_norm(rhs))) break;
      x += kkt.solve(r, 0);
    }

    const Vec z = x.head(n);
    const Vec lam = x.segment(n, me);
    // inconsistent active rows leave a residual the regularization hides
    if (me + na > 0 && inf_norm(Vec(C * z - b)) > 1e-6 * scale_p) return false;
    Vec del = Vec::Zero(q.mi);
    for (Eigen::Index r = 0; r < na; ++r) del[act[static_cast<std::size_t>(r)]] = x[n + me + r];

    std::vector<Eigen::Index> violated;
    if (q.mi) {
      const Vec slack = q.Ain * z - q.bin;
      std::vector<char> in_set(static_cast<std::size_t>(q.mi), 0);
      for (auto i : act) in_set[static_cast<std::size_t>(i)] = 1;
      for (Eigen::Index i = 0; i < q.mi; ++i)
        if (!in_set[static_cast<std::size_t>(i)] && slack[i] > tol_p) violated.push_back(i);
    }
    if (!violated.empty()) {
      act.insert(act.end(), violated.begin(), violated.end());
      continue;
    }
    // Per-row dual tolerance from the magnitudes entering that row's
    // stationarity equations, so tiny multipliers are judged on their own scale.
    const Vec mag = (q.H2 * z).cwiseAbs() + q.f.cwiseAbs() +
                    (me ? Vec(SpMat(q.Aeq.cwiseAbs()).transpose() * lam.cwiseAbs()) : Vec(Vec::Zero(n)));
    Eigen::Index worst = -1;
    double worst_v = 0.0;
    for (auto i : act) {
      double row_scale = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator e(rows, i); e; ++e)
        row_scale = std::max(row_scale, mag[e.col()] / std::abs(e.value()));
      const double tol_i = std::min(tol_d, 1e-12 * row_scale + 1e-300);
      if (del[i] < -tol_i && del[i] / (tol_i + 1e-300) < worst_v) {
        worst_v = del[i] / (tol_i + 1e-300);
        worst = i;
      }
    }
    if (worst >= 0) {
      act.erase(std::find(act.begin(), act.end(), worst));
      continue;
    }
    const KktResiduals res = residuals(q, z, lam, del);
    if (res.primal_eq > 1e-11 * scale_p || res.stationarity > 1e-11 * scale_d) return false;
    it.z = z;
    it.lam = lam;
    del_out = del.cwiseMax(0.0);
    return true;
  }
  return false;
}

// Moves an LP optimum along its optimal face until the active rows span R^n.
inline void purify_to_vertex(const NormalizedQp& q, Vec& z) {
  const auto n = q.n;
  const Mat Aeq = Mat(q.Aeq);
  const Mat Ain = Mat(q.Ain);
  for (Eigen::Index step = 0; step <= n; ++step) {
    std::vector<Eigen::Index> act;
    const Vec slack = q.mi ? Vec(Ain * z - q.bin) : Vec(0);
    for (Eigen::Index i = 0; i < q.mi; ++i)
      if (std::abs(slack[i]) <= 1e-9 * (1.0 + std::abs(q.bin[i]))) act.push_back(i);
    Mat C(q.me + static_cast<Eigen::Index>(act.size()), n);
    if (q.me) C.topRows(q.me) = Aeq;
    for (std::size_t r = 0; r < act.size(); ++r) C.row(q.me + static_cast<Eigen::Index>(r)) = Ain.row(act[r]);

    Mat kernel;
    if (C.rows() == 0) {
      kernel = Mat::Identity(n, n);
    } else {
      Eigen::FullPivLU<Mat> lu(C);
      lu.setThreshold(1e-10);
      if (lu.rank() == n) return;
      kernel = lu.kernel();
    }
    Vec p = kernel.col(0).normalized();
    Eigen::Index imax = 0;
    p.cwiseAbs().maxCoeff(&imax);
    if (p[imax] < 0) p = -p;
    if (std::abs(q.f.dot(p)) > 1e-9 * (1.0 + inf_norm(q.f))) return;  // not a flat face direction

    auto ratio = [&](const Vec& dir, double& tmin, Eigen::Index& hit) {
      tmin = std::numeric_limits<double>::infinity();
      hit = -1;
      const Vec rate = Ain * dir;
      for (Eigen::Index i = 0; i < q.mi; ++i) {
        if (rate[i] <= 1e-12) continue;
        const double t = std::max(0.0, -slack[i]) / rate[i];
        if (t < tmin - 1e-15) {
          tmin = t;
          hit = i;
        }
      }
    };
    double t = 0.0;
    Eigen::Index hit = -1;
    ratio(p, t, hit);
    if (hit < 0) {
      p = -p;
      ratio(p, t, hit);
    }
    if (hit < 0) return;  // optimal face contains a line
    z += t * p;
  }
}

inline QpSolution classify_failure(const NormalizedQp& q, const IpmIterate& it, const QpSettings& st);

inline QpSolution solve_normalized(const NormalizedQp& q, const QpSettings& st) {
  QpSolution sol;
  IpmIterate it = interior_point(q, st);
  sol.iterations = it.iterations;
  if (!it.converged && st.polish && it.z.allFinite()) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < q.mi; ++i)
      if (it.del[i] > it.s[i]) act.push_back(i);
    Vec pd;
    if (polish(q, it, act, pd)) {
      it.del = std::move(pd);
      it.s = q.mi ? Vec((q.bin - q.Ain * it.z).cwiseMax(0.0)) : Vec(0);
      it.converged = true;
    }
  }
  if (!it.converged) {
    if (!st.classify) {
      sol.status = QpStatus::max_iter;
      sol.z = it.z;
      sol.lambda = it.lam;
      sol.delta = it.del;
      return sol;
    }
    return classify_failure(q, it, st);
  }

  Vec del = it.del;
  if (st.polish) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < q.mi; ++i)
      if (it.del[i] > it.s[i]) act.push_back(i);
    Vec pd;
    if (polish(q, it, act, pd)) {
      del = std::move(pd);
      sol.polished = true;
    }
  }
  if (st.vertex && q.is_lp) purify_to_vertex(q, it.z);

  sol.status = QpStatus::optimal;
  sol.z = it.z;
  sol.lambda = it.lam;
  sol.delta = del;
  sol.objective = objective_of(q, it.z);
  if (q.mi) {
    const Vec slack = q.Ain * it.z - q.bin;
    for (Eigen::Index i = 0; i < q.mi; ++i)
      if (std::abs(slack[i]) <= st.tol_active * (1.0 + std::abs(q.bin[i]))) sol.active.push_back(i);
  }
  return sol;
}

inline QpSolution classify_failure(const NormalizedQp& q, const IpmIterate& it, const QpSettings& st) {
  const auto n = q.n, me = q.me, mi = q.mi;
  QpSettings sub = st;
  sub.classify = false;
  sub.vertex = false;
  sub.polish = false;
  sub.check_psd = false;

  QpSolution out;
  out.iterations = it.iterations;
  out.z = it.z;
  out.lambda = it.lam;
  out.delta = it.del;

  // Elastic phase 1: min 1'(p + q + r) + eps |z|^2
  //   A_eq z + p - q = b_eq,  A_in z - r <= b_in,  p, q, r >= 0.
  {
    const Eigen::Index nv = n + 2 * me + mi;
    NormalizedQp e;
    e.n = nv;
    e.me = me;
    e.mi = mi + 2 * me + mi;
    e.is_lp = false;
    std::vector<Eigen::Triplet<double>> th, te, ti;
    for (Eigen::Index i = 0; i < n; ++i) th.emplace_back(i, i, 2e-10);
    for (Eigen::Index k = 0; k < q.Aeq.outerSize(); ++k)
      for (SpMat::InnerIterator x(q.Aeq, k); x; ++x) te.emplace_back(x.row(), x.col(), x.value());
    for (Eigen::Index i = 0; i < me; ++i) {
      te.emplace_back(i, n + i, 1.0);
      te.emplace_back(i, n + me + i, -1.0);
    }
    for (Eigen::Index k = 0; k < q.Ain.outerSize(); ++k)
      for (SpMat::InnerIterator x(q.Ain, k); x; ++x) ti.emplace_back(x.row(), x.col(), x.value());
    for (Eigen::Index i = 0; i < mi; ++i) ti.emplace_back(i, n + 2 * me + i, -1.0);
    for (Eigen::Index i = 0; i < 2 * me + mi; ++i) ti.emplace_back(mi + i, n + i, -1.0);
    e.H2 = SpMat(nv, nv);
    e.H2.setFromTriplets(th.begin(), th.end());
    e.Aeq = SpMat(me, nv);
    e.Aeq.setFromTriplets(te.begin(), te.end());
    e.Ain = SpMat(e.mi, nv);
    e.Ain.setFromTriplets(ti.begin(), ti.end());
    e.f = Vec::Zero(nv);
    e.f.tail(2 * me + mi).setOnes();
    e.beq = q.beq;
    e.bin = Vec::Zero(e.mi);
    if (mi) e.bin.head(mi) = q.bin;
    const QpSolution ph1 = solve_normalized(e, sub);
    const double scale_p = 1.0 + std::max(inf_norm(q.beq), inf_norm(q.bin));
    const double violation = ph1.ok() ? e.f.dot(ph1.z) : std::numeric_limits<double>::infinity();
    if (violation > 1e-7 * scale_p) {
      out.status = QpStatus::infeasible;
      return out;
    }
  }

  // Recession direction: min f'd  s.t.  H d = 0, A_eq d = 0, A_in d <= 0, |d| <= 1.
  {
    NormalizedQp r;
    r.n = n;
    r.is_lp = true;
    const SpMat Hrows = q.H2;
    r.me = (q.is_lp ? 0 : n) + me;
    r.mi = mi + 2 * n;
    std::vector<Eigen::Triplet<double>> te, ti;
    if (!q.is_lp)
      for (Eigen::Index k = 0; k < Hrows.outerSize(); ++k)
        for (SpMat::InnerIterator x(Hrows, k); x; ++x) te.emplace_back(x.row(), x.col(), x.value());
    const Eigen::Index off = q.is_lp ? 0 : n;
    for (Eigen::Index k = 0; k < q.Aeq.outerSize(); ++k)
      for (SpMat::InnerIterator x(q.Aeq, k); x; ++x) te.emplace_back(off + x.row(), x.col(), x.value());
    for (Eigen::Index k = 0; k < q.Ain.outerSize(); ++k)
      for (SpMat::InnerIterator x(q.Ain, k); x; ++x) ti.emplace_back(x.row(), x.col(), x.value());
    for (Eigen::Index i = 0; i < n; ++i) {
      ti.emplace_back(mi + i, i, 1.0);
      ti.emplace_back(mi + n + i, i, -1.0);
    }
    r.H2 = SpMat(n, n);
    r.Aeq = SpMat(r.me, n);
    r.Aeq.setFromTriplets(te.begin(), te.end());
    r.Ain = SpMat(r.mi, n);
    r.Ain.setFromTriplets(ti.begin(), ti.end());
    r.f = q.f;
    r.beq = Vec::Zero(r.me);
    r.bin = Vec::Zero(r.mi);
    r.bin.tail(2 * n).setOnes();
    const QpSolution dir = solve_normalized(r, sub);
    if (dir.ok() && q.f.dot(dir.z) < -1e-8 * (1.0 + inf_norm(q.f))) {
      out.status = QpStatus::unbounded;
      return out;
    }
  }
  out.status = QpStatus::max_iter;
  return out;
}

}  // namespace detail

/// Solves a convex QP. The returned multipliers follow
/// A_eq' lambda + A_in' delta = -(2 H z + f).
inline QpSolution solve_qp(const QpProblem& p, const QpSettings& settings = {}) {
  const detail::NormalizedQp q = detail::normalize(p, settings.check_psd);
  QpSolution sol = detail::solve_normalized(q, settings);
  if (sol.ok() && !q.is_lp) sol.objective = sol.z.dot(p.H * sol.z) + p.f.dot(sol.z);
  return sol;
}

inline QpSettings lp_settings() {
  QpSettings s;
  s.vertex = true;
  s.check_psd = false;
  return s;
}

/// LP special case (H = 0). Returns a vertex optimizer when one exists.
inline QpSolution solve_lp(const Vec& f, const Mat& A_eq, const Vec& b_eq, const Mat& A_in, const Vec& b_in,
                           const QpSettings& settings = lp_settings()) {
  QpProblem p;
  p.f = f;
  p.A_eq = A_eq;
  p.b_eq = b_eq;
  p.A_in = A_in;
  p.b_in = b_in;
  return solve_qp(p, settings);
}

inline KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& s) {
  const detail::NormalizedQp q = detail::normalize(p, false);
  return detail::residuals(q, s.z, s.lambda.size() ? s.lambda : Vec(Vec::Zero(q.me)),
                           s.delta.size() ? s.delta : Vec(Vec::Zero(q.mi)));
}

}  // namespace lmpc

#endif  // LMPC_QP_HPP
