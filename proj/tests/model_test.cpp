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

#include "lmpc/model.hpp"
#include "oracles.hpp"

namespace lmpc {
namespace {

using testing::double_integrator;
using testing::vec2;

TEST(LinearSystem, RejectsBadShapes) {
  EXPECT_THROW(LinearSystem(Mat::Identity(2, 3), Mat::Ones(2, 1)), std::invalid_argument);
  EXPECT_THROW(LinearSystem(Mat::Identity(2, 2), Mat::Ones(3, 1)), std::invalid_argument);
  Mat A = Mat::Identity(2, 2);
  A(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(LinearSystem(A, Mat::Ones(2, 1)), std::invalid_argument);
}

TEST(StageCost, ChecksDefiniteness) {
  EXPECT_THROW(StageCost(-Mat::Identity(2, 2), Mat::Identity(1, 1)), std::invalid_argument);
  EXPECT_THROW(StageCost(Mat::Identity(2, 2), Mat::Zero(1, 1)), std::invalid_argument);
  Mat Q(2, 2);
  Q << 1, 2, 0, 1;  // symmetrized to [[1,1],[1,1]], PSD
  EXPECT_NO_THROW(StageCost(Q, Mat::Identity(1, 1)));
}

TEST(ConstraintSet, OriginMustBeInterior) {
  Mat F = Mat::Identity(1, 1);
  EXPECT_THROW(ConstraintSet(F, Vec::Zero(1), F, Vec::Ones(1)), std::invalid_argument);
  EXPECT_THROW(ConstraintSet(F, Vec::Ones(2), F, Vec::Ones(1)), std::invalid_argument);
}

TEST(Model, StepAndStageCost) {
  const ControlProblem p = double_integrator(2.0);
  const Vec x = vec2(-14, 2);
  const Vec u = Vec::Constant(1, 1.5);
  const Vec xn = step(p.sys, x, u);
  EXPECT_DOUBLE_EQ(xn[0], -12.0);
  EXPECT_DOUBLE_EQ(xn[1], 3.5);
  EXPECT_DOUBLE_EQ(stage_cost(p.cost, x, u), 196.0 + 4.0 + 2.25);
  EXPECT_THROW(step(p.sys, Vec::Zero(3), u), std::invalid_argument);
}

TEST(Model, ConstraintCheck) {
  const ControlProblem p = double_integrator(2.0);
  EXPECT_TRUE(check_constraints(p.cons, vec2(15, -15), Vec::Constant(1, 2.0)).feasible);
  const auto v = check_constraints(p.cons, vec2(15.5, 0), Vec::Constant(1, -2.25));
  EXPECT_FALSE(v.feasible);
  EXPECT_NEAR(v.state, 0.5, 1e-15);
  EXPECT_NEAR(v.input, 0.25, 1e-15);
}

TEST(Riccati, SolvesDareAndMatchesSimulatedCost) {
  const ControlProblem p = double_integrator(2.0);
  const LqrSolution s = riccati_lqr(p.sys, p.cost);
  EXPECT_LT(testing::dare_residual(p.sys.A(), p.sys.B(), p.cost.Q(), p.cost.R(), s.P), 1e-9);
  EXPECT_LT(spectral_radius(p.sys.A() + p.sys.B() * s.K), 1.0);
  for (const Vec& x0 : {vec2(1, 0), vec2(-2, 3), vec2(0.5, -0.25)}) {
    const double J = testing::simulate_lqr_cost(p.sys.A(), p.sys.B(), p.cost.Q(), p.cost.R(), s.K, x0);
    EXPECT_NEAR(J, x0.dot(s.P * x0), 1e-8 * (1.0 + J));
  }
}

TEST(Riccati, ScalarClosedForm) {
  // a = 2, b = 1, q = r = 1: P = 1 + 4P - 4P^2 / (1 + P) has root 2 + sqrt(5)
  const LinearSystem sys(Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 1.0));
  const StageCost c(Mat::Identity(1, 1), Mat::Identity(1, 1));
  const LqrSolution s = riccati_lqr(sys, c);
  const double P = 2.0 + std::sqrt(5.0);
  EXPECT_NEAR(s.P(0, 0), P, 1e-10);
  EXPECT_NEAR(s.K(0, 0), -2.0 * P / (1.0 + P), 1e-10);
}

}  // namespace
}  // namespace lmpc
