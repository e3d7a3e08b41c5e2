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

#include <sstream>

#include "lmpc/certify.hpp"
#include "lmpc/controller.hpp"
#include "oracles.hpp"

namespace lmpc {
namespace {

using testing::vec2;

// Example-2 fixed point with N = 4, computed once per test binary.
const FixedPoint& n4_fixed_point() {
  static const FixedPoint fp = [] {
    const ControlProblem p = testing::double_integrator(1.5);
    LmpcConfig cfg;
    cfg.horizon = 4;
    const IterationHistory h = run_until_fixed_point(p, vec2(-14, 2), cfg);
    return FixedPoint{h.fixed_point().states, h.fixed_point().inputs};
  }();
  return fp;
}

TEST(Compact, DimensionsAndRowIdentity) {
  const ControlProblem p = testing::double_integrator(1.5);
  const CompactProblem cp = build_compact(p, vec2(-14, 2), vec2(0, 0), 3);
  EXPECT_EQ(cp.G_eq.rows(), 4 * 2);
  EXPECT_EQ(cp.G_eq.cols(), 3 * 3);
  EXPECT_EQ(cp.F_in.rows(), 3 * 6);
  const RowId id = row_identity(cp, 6 + 4);  // step 1, first input row
  EXPECT_EQ(id.step, 1);
  EXPECT_TRUE(id.input);
  EXPECT_EQ(id.index, 0);
}

TEST(Compact, NumericalRank) {
  Mat M(3, 3);
  M << 1, 0, 0, 0, 1, 0, 1, 1, 0;
  EXPECT_EQ(numerical_rank(M).rank, 2);
  EXPECT_EQ(numerical_rank(Mat::Identity(4, 3)).rank, 3);
  Mat N = Mat::Identity(2, 2);
  N(1, 1) = 1e-9;
  EXPECT_EQ(numerical_rank(N, 1e-7).rank, 1);
}

TEST(Certify, MultipliersSolveStationarityIndependently) {
  const ControlProblem p = testing::double_integrator(1.5);
  const FixedPoint& fp = n4_fixed_point();
  const CompactProblem cp = build_compact(p, fp.x(0), fp.x(4), 4);
  const SegmentSolution s = solve_segment(cp);
  ASSERT_TRUE(s.ok());
  // [G' F_A'] [lambda; delta_A] = -2 Q z solved by least squares
  const auto na = static_cast<Eigen::Index>(s.kkt.active.size());
  Mat K(cp.G_eq.cols(), cp.G_eq.rows() + na);
  K.leftCols(cp.G_eq.rows()) = cp.G_eq.transpose();
  for (Eigen::Index i = 0; i < na; ++i) K.col(cp.G_eq.rows() + i) = cp.F_in.row(s.kkt.active[static_cast<std::size_t>(i)]).transpose();
  const Vec rhs = -2.0 * cp.Q_T * s.z;
  const Vec mult = K.completeOrthogonalDecomposition().solve(rhs);
  EXPECT_LT((K * mult - rhs).lpNorm<Eigen::Infinity>(), 1e-6);
  for (std::size_t k = 0; k < s.kkt.lambda.size(); ++k)
    EXPECT_LT((mult.segment(static_cast<Eigen::Index>(k) * 2, 2) - s.kkt.lambda[k]).lpNorm<Eigen::Infinity>(), 1e-6);
  for (Eigen::Index i = 0; i < na; ++i)
    EXPECT_NEAR(mult[cp.G_eq.rows() + i], s.kkt.delta[s.kkt.active[static_cast<std::size_t>(i)]], 1e-6);
  EXPECT_LT(s.kkt.residuals.max(), 1e-6);
}

TEST(Certify, N4PassesLicqShiftAndStitch) {
  const ControlProblem p = testing::double_integrator(1.5);
  const FixedPoint& fp = n4_fixed_point();
  EXPECT_TRUE(check_licq(p, fp, 4).pass);
  const ShiftReport sh = multiplier_shift_check(p, fp, 4, 0);
  EXPECT_TRUE(sh.applicable);
  EXPECT_TRUE(sh.pass) << sh.lambda_dev << " " << sh.delta_dev;
  const StitchReport st = stitch_and_verify(p, fp, 4, 0);
  EXPECT_TRUE(st.pass) << st.note;
  EXPECT_LE(st.stationarity, 1e-5);
}

TEST(Certify, PerturbedTrajectoryIsRejected) {
  const ControlProblem p = testing::double_integrator(1.5);
  FixedPoint bad = n4_fixed_point();
  bad.states[3][0] += 1e-2;
  EXPECT_THROW(validate_trajectory(p, bad.states, bad.inputs), InvariantViolation);
  const StitchReport st = stitch_and_verify(p, bad, 4, 0);
  EXPECT_FALSE(st.pass);
  const OracleSolution orc = solve_long_horizon(p, vec2(-14, 2), 300);
  EXPECT_FALSE(verify_optimality(p, bad, orc, 1e-3, 1e-4).optimal);
  EXPECT_TRUE(verify_optimality(p, n4_fixed_point(), orc, 1e-3, 1e-4).optimal);
}

TEST(Certify, OracleMatchesForwardSimulation) {
  const ControlProblem p = testing::double_integrator(1.5);
  const OracleSolution orc = solve_long_horizon(p, vec2(-14, 2), 300);
  Vec x = orc.states.front();
  double J = 0.0;
  for (const auto& u : orc.inputs) {
    J += stage_cost(p.cost, x, u);
    x = step(p.sys, x, u);
  }
  EXPECT_LT(x.norm(), 1e-6);
  EXPECT_NEAR(J, orc.cost, 1e-6 * orc.cost);
}

TEST(Certify, MultiplierTableFormat) {
  const ControlProblem p = testing::double_integrator(1.5);
  const FixedPoint& fp = n4_fixed_point();
  const CompactProblem cp = build_compact(p, fp.x(0), fp.x(4), 4);
  const SegmentSolution s = solve_segment(cp);
  std::ostringstream os;
  write_multiplier_table(os, cp, s.kkt);
  const std::string t = os.str();
  EXPECT_NE(t.find("lambda_{0|0}      82.21      74.71"), std::string::npos) << t;
  EXPECT_NE(t.find("(input row 0, step 0)"), std::string::npos);
}

}  // namespace
}  // namespace lmpc
