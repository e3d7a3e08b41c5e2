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

#include <gtest/gtest.h>

#include <random>

#include "lmpc/qp.hpp"
#include "oracles.hpp"

namespace lmpc {
namespace {

TEST(Qp, MatchesActiveSetEnumeration) {
  std::mt19937 gen(7);
  std::uniform_int_distribution<int> nv_d(1, 6), mi_d(1, 8);
  for (int k = 0; k < 40; ++k) {
    const int nv = nv_d(gen);
    const int me = std::uniform_int_distribution<int>(0, std::max(0, nv - 2))(gen);
    const QpProblem p = testing::random_qp(gen, nv, me, mi_d(gen));
    const testing::EnumResult ref = testing::enumerate_qp(p);
    ASSERT_TRUE(ref.feasible);
    const QpSolution s = solve_qp(p);
    ASSERT_TRUE(s.ok()) << to_string(s.status);
    EXPECT_LT((s.z - ref.z).lpNorm<Eigen::Infinity>(), 1e-7) << "instance " << k;
    EXPECT_NEAR(s.objective, ref.objective, 1e-7 * (1.0 + std::abs(ref.objective)));
    EXPECT_LT(kkt_residuals(p, s).max(), 1e-6);
  }
}

TEST(Qp, BoxConstrainedClosedForm) {
  // min (z - c)'(z - c) on [-1, 1]^2 with c = (2, -0.5): z = (1, -0.5), delta_0 = 2.
  QpProblem p;
  p.H = Mat::Identity(2, 2);
  p.f = Eigen::Vector2d(-4.0, 1.0);
  p.A_in = Mat(4, 2);
  p.A_in << Mat::Identity(2, 2), -Mat::Identity(2, 2);
  p.b_in = Vec::Ones(4);
  const QpSolution s = solve_qp(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.z[0], 1.0, 1e-9);
  EXPECT_NEAR(s.z[1], -0.5, 1e-9);
  EXPECT_NEAR(s.delta[0], 2.0, 1e-8);
  EXPECT_NEAR(s.delta[1], 0.0, 1e-8);
  ASSERT_EQ(s.active.size(), 1u);
  EXPECT_EQ(s.active[0], 0);
}

TEST(Qp, EqualityMultiplierSign) {
  // min z1^2 + z2^2 s.t. z1 + z2 = 2: z = (1, 1); stationarity 2z + lambda 1 = 0.
  QpProblem p;
  p.H = Mat::Identity(2, 2);
  p.f = Vec::Zero(2);
  p.A_eq = Mat::Ones(1, 2);
  p.b_eq = Vec::Constant(1, 2.0);
  const QpSolution s = solve_qp(p);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s.lambda[0], -2.0, 1e-9);
  EXPECT_NEAR(s.objective, 2.0, 1e-9);
}

TEST(Qp, DetectsInfeasible) {
  QpProblem p;
  p.H = Mat::Identity(1, 1);
  p.f = Vec::Zero(1);
  p.A_in = Mat(2, 1);
  p.A_in << 1, -1;
  p.b_in = Eigen::Vector2d(-1.0, -1.0);  // z <= -1 and z >= 1
  EXPECT_EQ(solve_qp(p).status, QpStatus::infeasible);
}

TEST(Lp, DetectsUnboundedAndFindsVertex) {
  Mat A(1, 2);
  A << -1, 0;
  const QpSolution u = solve_lp(Eigen::Vector2d(-1.0, 0.0), Mat(0, 2), Vec(0), A, Vec::Zero(1));
  EXPECT_EQ(u.status, QpStatus::unbounded);

  // max x + 2y on the triangle x, y >= 0, x + y <= 1: vertex (0, 1).
  Mat T(3, 2);
  T << -1, 0, 0, -1, 1, 1;
  const QpSolution v = solve_lp(Eigen::Vector2d(-1.0, -2.0), Mat(0, 2), Vec(0), T, Eigen::Vector3d(0, 0, 1));
  ASSERT_TRUE(v.ok());
  EXPECT_NEAR(v.z[0], 0.0, 1e-9);
  EXPECT_NEAR(v.z[1], 1.0, 1e-9);
  EXPECT_NEAR(v.objective, -2.0, 1e-9);
}

TEST(Qp, RejectsIndefiniteHessian) {
  QpProblem p;
  p.H = Mat::Identity(2, 2);
  p.H(1, 1) = -1.0;
  p.f = Vec::Zero(2);
  EXPECT_THROW(solve_qp(p), std::invalid_argument);
}

}  // namespace
}  // namespace lmpc
