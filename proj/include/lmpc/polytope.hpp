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
#ifndef LMPC_POLYTOPE_HPP
#define LMPC_POLYTOPE_HPP

// Half-space polyhedra {z : H z <= h}: membership, LP-based redundancy
// removal, Fourier-Motzkin projection, planar vertex enumeration, the
// one-step backward reachable set and the standard invariant-set iterations.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <utility>
#include <vector>

#include "lmpc/model.hpp"
#include "lmpc/qp.hpp"

namespace lmpc {

/// Bounding box added to polyhedral LPs so the interior-point method always
/// sees a bounded problem. Sets reaching it are reported as unbounded.
inline constexpr double kLpBox = 1e6;

class Polyhedron {
 public:
  Polyhedron() = default;
  Polyhedron(Mat H, Vec h) : H_(std::move(H)), h_(std::move(h)) {
    detail::require(H_.rows() == h_.size(), "Polyhedron: H has " + std::to_string(H_.rows()) + " rows, h has " +
                                                std::to_string(h_.size()));
    detail::require(H_.allFinite() && h_.allFinite(), "Polyhedron: non-finite data");
    for (Eigen::Index i = 0; i < H_.rows(); ++i) {
      detail::require(!(H_.row(i).lpNorm<Eigen::Infinity>() == 0.0 && h_[i] < 0.0),
                      "Polyhedron: row " + std::to_string(i) + " is 0 <= negative");
    }
  }

  /// Whole space R^k (no rows).
  static Polyhedron universe(Eigen::Index k) { return {Mat(0, k), Vec(0)}; }

  /// Box lo <= z <= hi, rows ordered [I; -I].
  static Polyhedron box(const Vec& lo, const Vec& hi) {
    detail::require(lo.size() == hi.size(), "Polyhedron::box: bound size mismatch");
    const auto k = lo.size();
    Mat H(2 * k, k);
    H << Mat::Identity(k, k), -Mat::Identity(k, k);
    Vec h(2 * k);
    h << hi, -lo;
    return {H, h};
  }

  [[nodiscard]] const Mat& H() const { return H_; }
  [[nodiscard]] const Vec& h() const { return h_; }
  [[nodiscard]] Eigen::Index dim() const { return H_.cols(); }
  [[nodiscard]] Eigen::Index rows() const { return H_.rows(); }

  [[nodiscard]] bool contains(const Vec& z, double tol = 1e-9) const {
    detail::require(z.size() == dim(), "Polyhedron::contains: dimension mismatch");
    return rows() == 0 || (H_ * z - h_).maxCoeff() <= tol;
  }

  /// Stacks the rows of both sets.
  [[nodiscard]] Polyhedron intersect(const Polyhedron& o) const {
    detail::require(o.dim() == dim(), "Polyhedron::intersect: dimension mismatch");
    Mat H(rows() + o.rows(), dim());
    H << H_, o.H_;
    Vec h(rows() + o.rows());
    h << h_, o.h_;
    return {H, h};
  }

 private:
  Mat H_;
  Vec h_;
};

namespace detail {

inline Polyhedron with_box(const Polyhedron& P) {
  const Vec b = Vec::Constant(P.dim(), kLpBox);
  return P.intersect(Polyhedron::box(-b, b));
}

/// max t s.t. H_i z + t ||H_i|| <= h_i, t <= 1 (Chebyshev-type depth).
inline double depth(const Polyhedron& P) {
  const auto k = P.dim();
  const Polyhedron B = with_box(P);
  Mat A(B.rows() + 1, k + 1);
  A.setZero();
  A.topLeftCorner(B.rows(), k) = B.H();
  for (Eigen::Index i = 0; i < P.rows(); ++i) A(i, k) = P.H().row(i).norm();
  A(B.rows(), k) = 1.0;
  Vec b(B.rows() + 1);
  b << B.h(), 1.0;
  Vec f = Vec::Zero(k + 1);
  f[k] = -1.0;
  QpSettings st = lp_settings();
  st.vertex = false;
  const QpSolution s = solve_lp(f, Mat(0, k + 1), Vec(0), A, b, st);
  if (s.status == QpStatus::infeasible) return -std::numeric_limits<double>::infinity();
  if (!s.ok()) throw Error("depth: LP failed with status " + to_string(s.status));
  return s.z[k];
}

}  // namespace detail

inline bool is_empty(const Polyhedron& P, double tol = 1e-9) {
  if (P.rows() == 0) return false;
  return detail::depth(P) < -tol;
}

struct SupportResult {
  double value = 0.0;
  Vec maximizer;
};

/// max d'z over P. Throws EmptySetError / UnboundedError.
inline SupportResult support(const Polyhedron& P, const Vec& d) {
  detail::require(d.size() == P.dim(), "support: dimension mismatch");
  const Polyhedron B = detail::with_box(P);
  const QpSolution s = solve_lp(-d, Mat(0, P.dim()), Vec(0), B.H(), B.h());
  if (s.status == QpStatus::infeasible) throw EmptySetError("support: empty polyhedron");
  if (!s.ok()) throw Error("support: LP failed with status " + to_string(s.status));
  if (s.z.lpNorm<Eigen::Infinity>() >= 0.5 * kLpBox) throw UnboundedError("support: unbounded in the given direction");
  return {d.dot(s.z), s.z};
}

/// Same point set with every retained row irredundant. Rows are normalized
/// to unit Euclidean norm; all-zero rows (0 <= h, h >= 0) are dropped.
inline Polyhedron remove_redundancy(const Polyhedron& P, double tol = 1e-9) {
  if (is_empty(P)) throw EmptySetError("remove_redundancy: empty polyhedron");
  const auto k = P.dim();
  std::vector<Vec> rows;
  std::vector<double> rhs;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const double nrm = P.H().row(i).norm();
    if (nrm == 0.0) continue;
    const Vec a = P.H().row(i).transpose() / nrm;
    const double b = P.h()[i] / nrm;
    bool dup = false;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if ((rows[j] - a).lpNorm<Eigen::Infinity>() <= 1e-12) {
        rhs[j] = std::min(rhs[j], b);
        dup = true;
        break;
      }
    }
    if (!dup) {
      rows.push_back(a);
      rhs.push_back(b);
    }
  }

  std::vector<char> keep(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < rows.size(); ++j)
      if (j != i && keep[j]) others.push_back(j);
    Mat H(static_cast<Eigen::Index>(others.size()), k);
    Vec h(static_cast<Eigen::Index>(others.size()));
    for (std::size_t r = 0; r < others.size(); ++r) {
      H.row(static_cast<Eigen::Index>(r)) = rows[others[r]].transpose();
      h[static_cast<Eigen::Index>(r)] = rhs[others[r]];
    }
    // Relax row i by one unit so the LP optimum shows whether it binds.
    Mat Hi(H.rows() + 1, k);
    Hi << H, rows[i].transpose();
    Vec hi(h.size() + 1);
    hi << h, rhs[i] + 1.0;
    const Polyhedron B = detail::with_box(Polyhedron(Hi, hi));
    const QpSolution s = solve_lp(-rows[i], Mat(0, k), Vec(0), B.H(), B.h());
    if (!s.ok()) throw Error("remove_redundancy: LP failed with status " + to_string(s.status));
    if (rows[i].dot(s.z) <= rhs[i] + tol * (1.0 + std::abs(rhs[i]))) keep[i] = 0;
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (keep[i]) kept.push_back(i);
  Mat H(static_cast<Eigen::Index>(kept.size()), k);
  Vec h(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    H.row(static_cast<Eigen::Index>(r)) = rows[kept[r]].transpose();
    h[static_cast<Eigen::Index>(r)] = rhs[kept[r]];
  }
  return {H, h};
}

/// Orthogonal projection onto keep_dims (in the given order) by
/// Fourier-Motzkin elimination, pruning redundant rows after every step.
inline Polyhedron project_fm(const Polyhedron& P, const std::vector<Eigen::Index>& keep_dims,
                             std::size_t row_cap = 20000) {
  const auto k = P.dim();
  for (auto d : keep_dims) detail::require(d >= 0 && d < k, "project_fm: keep dimension out of range");
  std::vector<Eigen::Index> order(keep_dims.begin(), keep_dims.end());
  for (Eigen::Index d = 0; d < k; ++d)
    if (std::find(keep_dims.begin(), keep_dims.end(), d) == keep_dims.end()) order.push_back(d);
  // Permute so the kept coordinates come first; eliminate from the back.
  Mat H(P.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) H.col(c) = P.H().col(order[static_cast<std::size_t>(c)]);
  Polyhedron cur = remove_redundancy(Polyhedron(H, P.h()));

  const auto nk = static_cast<Eigen::Index>(keep_dims.size());
  for (Eigen::Index e = k - 1; e >= nk; --e) {
    const Mat& A = cur.H();
    const Vec& b = cur.h();
    std::vector<Eigen::Index> pos, neg, zero;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double a = A(i, e);
      if (a > 1e-12) {
        pos.push_back(i);
      } else if (a < -1e-12) {
        neg.push_back(i);
      } else {
        zero.push_back(i);
      }
    }
    const std::size_t count = zero.size() + pos.size() * neg.size();
    if (count > row_cap)
      throw ResourceError("project_fm: " + std::to_string(count) + " rows exceed the cap of " + std::to_string(row_cap));
    Mat Hn(static_cast<Eigen::Index>(count), e);
    Vec hn(static_cast<Eigen::Index>(count));
    Eigen::Index r = 0;
    for (auto i : zero) {
      Hn.row(r) = A.row(i).head(e);
      hn[r++] = b[i];
    }
    for (auto p : pos) {
      for (auto q : neg) {
        const double ap = A(p, e), aq = -A(q, e);
        Hn.row(r) = aq * A.row(p).head(e) + ap * A.row(q).head(e);
        hn[r++] = aq * b[p] + ap * b[q];
      }
    }
    cur = remove_redundancy(Polyhedron(Hn, hn));
  }
  return cur;
}

/// Mutual containment, decided row by row with support LPs.
inline bool contained_in(const Polyhedron& inner, const Polyhedron& outer, double tol = 1e-7) {
  detail::require(inner.dim() == outer.dim(), "contained_in: dimension mismatch");
  for (Eigen::Index i = 0; i < outer.rows(); ++i) {
    const double v = support(inner, outer.H().row(i).transpose()).value;
    if (v > outer.h()[i] + tol * (1.0 + std::abs(outer.h()[i]))) return false;
  }
  return true;
}

inline bool set_equal(const Polyhedron& a, const Polyhedron& b, double tol = 1e-7) {
  return contained_in(a, b, tol) && contained_in(b, a, tol);
}

namespace detail {

inline double cross2(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

}  // namespace detail

/// Convex hull of planar points, counter-clockwise from the lexicographic
/// minimum; collinear points within tol dropped.
inline std::vector<Vec> convex_hull_2d(std::vector<Vec> pts, double tol = 1e-9) {
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
  pts.erase(std::unique(pts.begin(), pts.end(), [tol](const Vec& a, const Vec& b) { return (a - b).lpNorm<Eigen::Infinity>() <= tol; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec> hull(2 * pts.size());
  std::size_t k = 0;
  auto keep = [&](const Vec& p, std::size_t floor) {
    while (k >= floor + 2) {
      const double len = (hull[k - 1] - hull[k - 2]).norm() + (p - hull[k - 2]).norm();
      if (detail::cross2(hull[k - 2], hull[k - 1], p) > tol * std::max(1.0, len)) break;
      --k;
    }
    hull[k++] = p;
  };
  for (const auto& p : pts) keep(p, 0);
  const std::size_t lower = k - 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) keep(pts[i], lower);
  hull.resize(k - 1);
  return hull;
}

/// Membership in a convex polygon given by counter-clockwise vertices, with
/// Euclidean tolerance tol outside each edge.
inline bool polygon_contains(const std::vector<Vec>& verts, const Vec& x, double tol = 1e-7) {
  if (verts.empty()) return false;
  if (verts.size() == 1) return (x - verts[0]).norm() <= tol;
  if (verts.size() == 2) {
    const Vec e = verts[1] - verts[0];
    const double s = std::clamp((x - verts[0]).dot(e) / e.squaredNorm(), 0.0, 1.0);
    return (verts[0] + s * e - x).norm() <= tol;
  }
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const Vec& a = verts[i];
    const Vec& b = verts[(i + 1) % verts.size()];
    if (detail::cross2(a, b, x) / (b - a).norm() < -tol) return false;
  }
  return true;
}

/// Every vertex of inner lies in outer (within tol).
inline bool polygon_contained_in(const std::vector<Vec>& inner, const std::vector<Vec>& outer, double tol = 1e-7) {
  return std::all_of(inner.begin(), inner.end(), [&](const Vec& v) { return polygon_contains(outer, v, tol); });
}

/// Half-space form of a counter-clockwise polygon with at least 3 vertices.
inline Polyhedron polygon_to_polyhedron(const std::vector<Vec>& verts) {
  detail::require(verts.size() >= 3, "polygon_to_polyhedron: need at least 3 vertices");
  const auto m = static_cast<Eigen::Index>(verts.size());
  Mat H(m, 2);
  Vec h(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vec& a = verts[static_cast<std::size_t>(i)];
    const Vec& b = verts[static_cast<std::size_t>((i + 1) % m)];
    Eigen::Vector2d nrm(b[1] - a[1], a[0] - b[0]);
    nrm.normalize();
    H.row(i) = nrm.transpose();
    h[i] = nrm.dot(a);
  }
  return {H, h};
}

/// Extreme points of a bounded planar polyhedron in counter-clockwise order,
/// starting from the lexicographically smallest. Lower-dimensional sets
/// return one or two points.
inline std::vector<Vec> vertices_2d(const Polyhedron& P, double tol = 1e-9) {
  detail::require(P.dim() == 2, "vertices_2d: dimension must be 2");
  if (is_empty(P)) throw EmptySetError("vertices_2d: empty polyhedron");
  for (const Eigen::Vector2d& d : {Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(0, -1)})
    (void)support(P, Vec(d));

  std::vector<Vec> cand;
  const Mat& H = P.H();
  const Vec& h = P.h();
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < H.rows(); ++j) {
      Eigen::Matrix2d M;
      M << H.row(i), H.row(j);
      const double det = M.determinant();
      if (std::abs(det) <= 1e-12 * H.row(i).norm() * H.row(j).norm()) continue;
      const Vec v = M.inverse() * Eigen::Vector2d(h[i], h[j]);
      if (P.contains(v, tol * (1.0 + v.lpNorm<Eigen::Infinity>()))) cand.push_back(v);
    }
  }
  return convex_hull_2d(std::move(cand), 1e-9);
}

/// Shoelace area of a CCW polygon.
inline double polygon_area(const std::vector<Vec>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec& p = v[i];
    const Vec& q = v[(i + 1) % v.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * a;
}

/// H-representation of the constraint sets.
inline Polyhedron state_set(const ConstraintSet& c) { return {c.F_x, c.b_x}; }
inline Polyhedron input_set(const ConstraintSet& c) { return {c.F_u, c.b_u}; }

/// {x in X : exists u in U with A x + B u in target}.
inline Polyhedron pre_set(const Polyhedron& target, const LinearSystem& sys, const ConstraintSet& cons) {
  const auto n = sys.n(), d = sys.d();
  detail::require(target.dim() == n, "pre_set: target dimension mismatch");
  const auto m = cons.mx() + cons.mu() + target.rows();
  Mat H = Mat::Zero(m, n + d);
  Vec h(m);
  H.topLeftCorner(cons.mx(), n) = cons.F_x;
  H.block(cons.mx(), n, cons.mu(), d) = cons.F_u;
  H.bottomLeftCorner(target.rows(), n) = target.H() * sys.A();
  H.bottomRightCorner(target.rows(), d) = target.H() * sys.B();
  h << cons.b_x, cons.b_u, target.h();
  std::vector<Eigen::Index> keep(static_cast<std::size_t>(n));
  std::iota(keep.begin(), keep.end(), 0);
  return project_fm(Polyhedron(H, h), keep);
}

struct InvariantSetResult {
  Polyhedron set;
  bool converged = false;
  int iterations = 0;
  std::vector<Polyhedron> iterates;  // K_0, K_1, ...
};

/// K_0 = X, K_{i+1} = Pre(K_i) cap K_i until two iterates coincide within
/// set_tol or max_iter is reached.
inline InvariantSetResult max_ctrl_invariant(const LinearSystem& sys, const ConstraintSet& cons, int max_iter = 100,
                                             double set_tol = 1e-7) {
  InvariantSetResult r;
  Polyhedron K = remove_redundancy(state_set(cons));
  r.iterates.push_back(K);
  for (int i = 1; i <= max_iter; ++i) {
    Polyhedron next = remove_redundancy(pre_set(K, sys, cons).intersect(K));
    r.iterates.push_back(next);
    r.iterations = i;
    const bool same = contained_in(K, next, set_tol);
    K = std::move(next);
    if (same) {
      r.converged = true;
      break;
    }
  }
  r.set = K;
  return r;
}

/// Maximal positively invariant set of x+ = (A + B K) x inside
/// {x in X : K x in U}.
inline InvariantSetResult max_pos_invariant(const LinearSystem& sys, const Mat& K_gain, const ConstraintSet& cons,
                                            int max_iter = 100, double set_tol = 1e-9) {
  detail::require(K_gain.rows() == sys.d() && K_gain.cols() == sys.n(), "max_pos_invariant: gain dimensions");
  const Mat Acl = sys.A() + sys.B() * K_gain;
  Mat H(cons.mx() + cons.mu(), sys.n());
  H << cons.F_x, cons.F_u * K_gain;
  Vec h(cons.mx() + cons.mu());
  h << cons.b_x, cons.b_u;
  InvariantSetResult r;
  Polyhedron O = remove_redundancy(Polyhedron(H, h));
  r.iterates.push_back(O);
  for (int i = 1; i <= max_iter; ++i) {
    Polyhedron next = remove_redundancy(O.intersect(Polyhedron(O.H() * Acl, O.h())));
    r.iterates.push_back(next);
    r.iterations = i;
    const bool same = contained_in(O, next, set_tol);
    O = std::move(next);
    if (same) {
      r.converged = true;
      break;
    }
  }
  r.set = O;
  return r;
}

/// One row per half-space: "H_1 ... H_k h".
inline void write_polyhedron(std::ostream& os, const Polyhedron& P) {
  char buf[64];
  os << "#";
  for (Eigen::Index j = 0; j < P.dim(); ++j) os << " H" << (j + 1);
  os << " h\n";
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.12e ", P.H()(i, j));
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.12e\n", P.h()[i]);
    os << buf;
  }
}

/// Two-column closed polyline (first vertex repeated).
inline void write_polygon(std::ostream& os, const std::vector<Vec>& verts) {
  char buf[96];
  os << "# x1 x2\n";
  for (std::size_t i = 0; i <= verts.size() && !verts.empty(); ++i) {
    const Vec& v = verts[i % verts.size()];
    std::snprintf(buf, sizeof(buf), "%.12e %.12e\n", v[0], v[1]);
    os << buf;
  }
}

}  // namespace lmpc

#endif  // LMPC_POLYTOPE_HPP
