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

// Fixed-horizon DDP (Gauss-Newton cost, first-order dynamics expansion) and
// the coarse-to-fine marching driver.

#ifndef FTOC_DDP_HPP_
#define FTOC_DDP_HPP_

#include <stdexcept>
#include <vector>

#include "ftoc/dynamics.hpp"

namespace ftoc {

struct DiscreteTrajectory {
  std::vector<StateVec> states;      // n_steps + 1 knots
  std::vector<ControlVec> controls;  // n_steps knots
  double dt = 0.0;

  int steps() const { return static_cast<int>(controls.size()); }
  double final_time() const { return dt * steps(); }
  bool empty() const { return states.empty(); }

  /// All-zero controls, states held at x0.
  static DiscreteTrajectory zeros(const StateVec& x0, int control_dim, double t_f, int n_steps);
  /// Constant control, states held at x0.
  static DiscreteTrajectory constant(const StateVec& x0, const ControlVec& u, double t_f,
                                     int n_steps);
};

struct FixedTimeProblem {
  ModelSpec model;
  CostSpec cost;
  StateVec x0;
  double t_f = 1.0;
  int n_steps = 100;

  double dt() const { return t_f / n_steps; }
};

struct DdpSettings {
  int max_iterations = 200;
  double tolerance = 1e-9;  // relative cost improvement
  double reg_init = 1e-10;  // grows only when a pass fails
  double reg_min = 1e-10;
  double reg_max = 1e6;
  double reg_factor = 10.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  double min_step = 1.0 / 1024.0;
  double divergence_norm = 1e6;
  /// Negative control for the oracle suite: caps every line-search step at
  /// `backtrack`, so the exact Newton step is never taken.
  bool fault_line_search = false;

  void validate() const;
};

struct DdpSolution {
  DiscreteTrajectory trajectory;
  std::vector<StateVec> costates;  // value gradient Vx per knot
  double total_cost = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> cost_history;  // cost after every accepted iteration
  std::vector<double> reg_history;   // regularization at each backward pass
};

/// Rollout produced a non-finite cost. Carries the last valid iterate (which
/// may be empty if the very first rollout failed) and the marching level.
class SolveDiverged : public std::runtime_error {
 public:
  SolveDiverged(const std::string& what, DdpSolution last_valid, int level = 0)
      : std::runtime_error(what), last_valid_(std::move(last_valid)), level_(level) {}
  const DdpSolution& last_valid() const { return last_valid_; }
  int level() const { return level_; }

 private:
  DdpSolution last_valid_;
  int level_;
};

/// Discrete cost sum_k L(x_k, u_k) dt + r_f |x_N - x_f|^2.
double trajectory_cost(const ModelSpec& model, const CostSpec& cost,
                       const DiscreteTrajectory& traj);

/// Open-loop RK4 rollout of `controls` from x0.
DiscreteTrajectory rollout(const ModelSpec& model, const StateVec& x0,
                           const std::vector<ControlVec>& controls, double dt);

/// Time-scales a trajectory onto `new_n` steps spanning `new_tf`: output knot
/// i samples the input at fraction i / new_n of its horizon.
DiscreteTrajectory rescale_guess(const DiscreteTrajectory& traj, double new_tf, int new_n);

DdpSolution solve_fixed_time(const FixedTimeProblem& problem, const DiscreteTrajectory& guess,
                             const DdpSettings& settings);

/// Solves on each step count of `schedule` in turn, warm-starting every
/// level from the previous one. Returns the finest level.
DdpSolution march_solve(const ModelSpec& model, const CostSpec& cost, const StateVec& x0,
                        double t_f, const std::vector<int>& schedule,
                        const DiscreteTrajectory& guess, const DdpSettings& settings);

}  // namespace ftoc

#endif  // FTOC_DDP_HPP_
