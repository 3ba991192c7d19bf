// Copyright 2026 The ftoc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ftoc/ddp.hpp"
#include "ftoc/oracle.hpp"
#include "test_util.hpp"

namespace ftoc {
namespace {

using testing::control;
using testing::state;

FixedTimeProblem lq_problem(int n_steps) {
  FixedTimeProblem p;
  p.model = ModelSpec::double_integrator();
  p.cost = testing::lq_cost();
  p.x0 = state({1.0, 0.0});
  p.t_f = 1.0;
  p.n_steps = n_steps;
  return p;
}

double max_control_gap(const DdpSolution& sol, const DoubleIntegratorLq& lq) {
  double err = 0.0;
  for (std::size_t k = 0; k < lq.controls.size(); ++k) {
    err = std::max(err, std::abs(sol.trajectory.controls[k][0] - lq.controls[k]));
  }
  return err;
}

TEST(DoubleIntegratorLq, CostMatchesRollout) {
  const FixedTimeProblem p = lq_problem(50);
  const DoubleIntegratorLq lq = solve_double_integrator_lq(p.cost, p.x0, p.t_f, p.n_steps);
  std::vector<ControlVec> u;
  for (double c : lq.controls) u.push_back(control({c}));
  const DiscreteTrajectory traj = rollout(p.model, p.x0, u, p.dt());
  EXPECT_NEAR(trajectory_cost(p.model, p.cost, traj), lq.cost, 1e-9 * lq.cost);
  EXPECT_LT((traj.states.back() - lq.states.back()).norm(), 1e-12);
}

TEST(SolveFixedTime, ReproducesRiccatiOptimumInNewtonSteps) {
  const FixedTimeProblem p = lq_problem(100);
  const DoubleIntegratorLq lq = solve_double_integrator_lq(p.cost, p.x0, p.t_f, p.n_steps);
  const DdpSolution sol =
      solve_fixed_time(p, DiscreteTrajectory::zeros(p.x0, 1, p.t_f, p.n_steps), DdpSettings{});
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.iterations, 2);
  EXPECT_LE(max_control_gap(sol, lq), 1e-6);
  EXPECT_NEAR(sol.total_cost, lq.cost, 1e-8 * lq.cost);
}

TEST(SolveFixedTime, CrippledLineSearchMissesRiccatiOptimum) {
  const FixedTimeProblem p = lq_problem(100);
  const DoubleIntegratorLq lq = solve_double_integrator_lq(p.cost, p.x0, p.t_f, p.n_steps);
  DdpSettings faulty;
  faulty.fault_line_search = true;
  const DdpSolution sol =
      solve_fixed_time(p, DiscreteTrajectory::zeros(p.x0, 1, p.t_f, p.n_steps), faulty);
  EXPECT_TRUE(sol.iterations > 2 || max_control_gap(sol, lq) > 1e-6);
}

TEST(SolveFixedTime, StartAtTargetStaysPut) {
  const ModelSpec model = ModelSpec::planar_arm(2);
  FixedTimeProblem p;
  p.model = model;
  p.cost = testing::arm_cost(model);
  p.x0 = p.cost.x_f;
  p.t_f = 0.5;
  p.n_steps = 50;
  const DdpSolution sol = solve_fixed_time(
      p, DiscreteTrajectory::constant(p.x0, p.cost.u_f, p.t_f, p.n_steps), DdpSettings{});
  EXPECT_TRUE(sol.converged);
  for (const auto& u : sol.trajectory.controls) EXPECT_LT((u - p.cost.u_f).norm(), 1e-9);
  EXPECT_NEAR(sol.total_cost, p.cost.r_t * p.t_f, 1e-9);
}

TEST(SolveFixedTime, CostHistoryIsMonotone) {
  const ModelSpec model = ModelSpec::planar_arm(2);
  FixedTimeProblem p;
  p.model = model;
  p.cost = testing::arm_cost(model);
  p.x0 = state({-0.4, 1.2, 0.0, 0.0});
  p.t_f = 0.8;
  p.n_steps = 80;
  const DdpSolution sol = solve_fixed_time(
      p, DiscreteTrajectory::zeros(p.x0, 2, p.t_f, p.n_steps), DdpSettings{});
  EXPECT_TRUE(sol.converged);
  ASSERT_FALSE(sol.cost_history.empty());
  for (std::size_t i = 1; i < sol.cost_history.size(); ++i) {
    EXPECT_LE(sol.cost_history[i], sol.cost_history[i - 1]);
  }
  EXPECT_EQ(sol.costates.size(), sol.trajectory.states.size());
  // Returned states are a genuine rollout of the returned controls.
  const DiscreteTrajectory replay = rollout(model, p.x0, sol.trajectory.controls, p.dt());
  EXPECT_LT((replay.states.back() - sol.trajectory.states.back()).norm(), 1e-12);
}

TEST(SolveFixedTime, RejectsBadSettings) {
  const FixedTimeProblem p = lq_problem(10);
  DdpSettings bad;
  bad.reg_factor = 1.0;
  EXPECT_THROW(solve_fixed_time(p, DiscreteTrajectory::zeros(p.x0, 1, p.t_f, p.n_steps), bad),
               ContractError);
}

TEST(MarchSolve, MatchesSingleLevelOracle) {
  const FixedTimeProblem p = lq_problem(200);
  const DoubleIntegratorLq lq = solve_double_integrator_lq(p.cost, p.x0, p.t_f, p.n_steps);
  const DdpSolution sol =
      march_solve(p.model, p.cost, p.x0, p.t_f, {10, 50, 200},
                  DiscreteTrajectory::zeros(p.x0, 1, p.t_f, 10), DdpSettings{});
  EXPECT_EQ(sol.trajectory.steps(), 200);
  EXPECT_LE(max_control_gap(sol, lq), 1e-6);
}

TEST(MarchSolve, RejectsUnsortedSchedule) {
  const FixedTimeProblem p = lq_problem(10);
  EXPECT_THROW(march_solve(p.model, p.cost, p.x0, 1.0, {50, 10},
                           DiscreteTrajectory::zeros(p.x0, 1, 1.0, 10), DdpSettings{}),
               ContractError);
}

TEST(RescaleGuess, LinearInterpolationOnNewGrid) {
  DiscreteTrajectory traj;
  traj.dt = 0.5;
  traj.states = {state({0.0, 0.0}), state({1.0, 2.0}), state({2.0, 4.0})};
  traj.controls = {control({0.0}), control({2.0})};
  const DiscreteTrajectory out = rescale_guess(traj, 2.0, 4);
  EXPECT_DOUBLE_EQ(out.dt, 0.5);
  ASSERT_EQ(out.states.size(), 5u);
  ASSERT_EQ(out.controls.size(), 4u);
  EXPECT_DOUBLE_EQ(out.states[1][0], 0.5);
  EXPECT_DOUBLE_EQ(out.states[3][1], 3.0);
  EXPECT_DOUBLE_EQ(out.states[4][0], 2.0);
  EXPECT_DOUBLE_EQ(out.controls[1][0], 1.0);
  EXPECT_DOUBLE_EQ(out.controls[3][0], 2.0);  // held past the last knot
}

TEST(RescaleGuess, IdentityOnSameGrid) {
  DiscreteTrajectory traj = DiscreteTrajectory::constant(state({1.0, -1.0}), control({0.3}), 1.0, 7);
  traj.controls[3][0] = -2.0;
  const DiscreteTrajectory out = rescale_guess(traj, 1.0, 7);
  for (int k = 0; k < 7; ++k) EXPECT_EQ(out.controls[k][0], traj.controls[k][0]);
}

TEST(TrajectoryCost, HoldingTheTargetCostsOnlyTime) {
  const CostSpec cost = testing::di_cost();
  const DiscreteTrajectory traj =
      DiscreteTrajectory::constant(cost.x_f, cost.u_f, 0.7, 70);
  EXPECT_NEAR(trajectory_cost(ModelSpec::double_integrator(), cost, traj), 70.0, 1e-9);
}

}  // namespace
}  // namespace ftoc
