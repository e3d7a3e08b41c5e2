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
#ifndef LMPC_MODEL_HPP
#define LMPC_MODEL_HPP

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "lmpc/types.hpp"

namespace lmpc {

/// Discrete-time LTI system x+ = A x + B u.
class LinearSystem {
 public:
  LinearSystem() = default;
  LinearSystem(Mat A, Mat B) : A_(std::move(A)), B_(std::move(B)) {
    detail::require(A_.rows() >= 1 && A_.rows() == A_.cols(), "LinearSystem: A must be square, got " + detail::dims(A_));
    detail::require(B_.rows() == A_.rows() && B_.cols() >= 1,
                    "LinearSystem: B is " + detail::dims(B_) + ", expected " + std::to_string(A_.rows()) + "xd");
    detail::require(A_.allFinite() && B_.allFinite(), "LinearSystem: non-finite entries");
  }

  [[nodiscard]] const Mat& A() const { return A_; }
  [[nodiscard]] const Mat& B() const { return B_; }
  [[nodiscard]] Eigen::Index n() const { return A_.rows(); }
  [[nodiscard]] Eigen::Index d() const { return B_.cols(); }

 private:
  Mat A_;
  Mat B_;
};

/// Quadratic stage cost h(x, u) = x'Qx + u'Ru with Q >= 0, R > 0.
/// Q and R are symmetrized on construction.
class StageCost {
 public:
  StageCost() = default;
  StageCost(const Mat& Q, const Mat& R) : Q_(0.5 * (Q + Q.transpose())), R_(0.5 * (R + R.transpose())) {
    detail::require(Q.rows() == Q.cols() && R.rows() == R.cols(), "StageCost: Q and R must be square");
    Eigen::SelfAdjointEigenSolver<Mat> eq(Q_, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Mat> er(R_, Eigen::EigenvaluesOnly);
    detail::require(eq.eigenvalues().minCoeff() >= -1e-10, "StageCost: Q is not positive semidefinite");
    detail::require(er.eigenvalues().minCoeff() >= 1e-12, "StageCost: R is not positive definite");
  }

  [[nodiscard]] const Mat& Q() const { return Q_; }
  [[nodiscard]] const Mat& R() const { return R_; }

 private:
  Mat Q_;
  Mat R_;
};

/// Polyhedral state and input constraints F_x x <= b_x, F_u u <= b_u.
/// The origin must be strictly feasible. An input block with zero rows
/// means the input is unconstrained.
struct ConstraintSet {
  Mat F_x;
  Vec b_x;
  Mat F_u;
  Vec b_u;

  ConstraintSet() = default;
  ConstraintSet(Mat Fx, Vec bx, Mat Fu, Vec bu)
      : F_x(std::move(Fx)), b_x(std::move(bx)), F_u(std::move(Fu)), b_u(std::move(bu)) {
    detail::require(F_x.rows() == b_x.size() && F_u.rows() == b_u.size(),
                    "ConstraintSet: row count mismatch between F and b");
    detail::require((b_x.size() == 0 || b_x.minCoeff() > 0.0) && (b_u.size() == 0 || b_u.minCoeff() > 0.0),
                    "ConstraintSet: origin must lie in the interior (b > 0)");
  }

  /// Box ||x||_inf <= x_max, ||u||_inf <= u_max; rows ordered [I; -I].
  static ConstraintSet box(Eigen::Index n, double x_max, Eigen::Index d, double u_max) {
    Mat Fx(2 * n, n);
    Fx << Mat::Identity(n, n), -Mat::Identity(n, n);
    Mat Fu(2 * d, d);
    Fu << Mat::Identity(d, d), -Mat::Identity(d, d);
    return {Fx, Vec::Constant(2 * n, x_max), Fu, Vec::Constant(2 * d, u_max)};
  }

  [[nodiscard]] Eigen::Index mx() const { return F_x.rows(); }
  [[nodiscard]] Eigen::Index mu() const { return F_u.rows(); }
};

/// The data of one constrained LQ regulation task.
struct ControlProblem {
  LinearSystem sys;
  StageCost cost;
  ConstraintSet cons;

  ControlProblem() = default;
  ControlProblem(LinearSystem s, StageCost c, ConstraintSet k) : sys(std::move(s)), cost(std::move(c)), cons(std::move(k)) {
    detail::require(cost.Q().rows() == sys.n() && cost.R().rows() == sys.d(), "ControlProblem: cost dimensions");
    detail::require(cons.F_x.cols() == sys.n() || cons.mx() == 0, "ControlProblem: F_x dimensions");
    detail::require(cons.F_u.cols() == sys.d() || cons.mu() == 0, "ControlProblem: F_u dimensions");
  }

  [[nodiscard]] Eigen::Index n() const { return sys.n(); }
  [[nodiscard]] Eigen::Index d() const { return sys.d(); }
};

inline Vec step(const LinearSystem& sys, const Vec& x, const Vec& u) {
  detail::require(x.size() == sys.n() && u.size() == sys.d(), "step: dimension mismatch");
  return sys.A() * x + sys.B() * u;
}

inline double stage_cost(const StageCost& c, const Vec& x, const Vec& u) {
  detail::require(x.size() == c.Q().rows() && u.size() == c.R().rows(), "stage_cost: dimension mismatch");
  return std::max(0.0, x.dot(c.Q() * x) + u.dot(c.R() * u));
}

struct ViolationReport {
  double state = 0.0;  // max(F_x x - b_x, 0)
  double input = 0.0;
  bool feasible = true;
};

inline constexpr double kConstraintTol = 1e-7;

inline ViolationReport check_constraints(const ConstraintSet& c, const Vec& x, const Vec& u,
                                         double tol = kConstraintTol) {
  detail::require(tol >= 0.0, "check_constraints: tol must be nonnegative");
  ViolationReport r;
  if (c.mx()) r.state = std::max(0.0, (c.F_x * x - c.b_x).maxCoeff());
  if (c.mu() && u.size()) r.input = std::max(0.0, (c.F_u * u - c.b_u).maxCoeff());
  r.feasible = r.state <= tol && r.input <= tol;
  return r;
}

struct LqrSolution {
  Mat P;  // cost-to-go x'Px
  Mat K;  // u = K x
  int iterations = 0;
};

/// Infinite-horizon LQR via fixed-point iteration of the discrete Riccati map
///   P <- Q + A'PA - A'PB (R + B'PB)^{-1} B'PA.
inline LqrSolution riccati_lqr(const LinearSystem& sys, const StageCost& cost, int max_iter = 10000,
                               double tol = 1e-12) {
  const Mat& A = sys.A();
  const Mat& B = sys.B();
  const Mat& Q = cost.Q();
  const Mat& R = cost.R();
  Mat P = Q;
  for (int k = 1; k <= max_iter; ++k) {
    const Mat S = R + B.transpose() * P * B;
    const Mat G = S.ldlt().solve(B.transpose() * P * A);
    Mat next = Q + A.transpose() * P * A - A.transpose() * P * B * G;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (delta <= tol) {
      const Mat K = -(R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
      return {P, K, k};
    }
  }
  throw DivergenceError("riccati_lqr: no convergence within " + std::to_string(max_iter) + " iterations");
}

inline double spectral_radius(const Mat& M) {
  Eigen::EigenSolver<Mat> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace lmpc

#endif  // LMPC_MODEL_HPP
