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

// Free terminal time outer loop: march_solve at the current horizon, take the
// Hamiltonian-integral gradient, update t_f, repeat; then round t_f onto the
// unified step grid and solve once more.

#ifndef FTOC_FREETIME_HPP_
#define FTOC_FREETIME_HPP_

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ftoc/ddp.hpp"

namespace ftoc {

struct FreeTimeSettings {
  double t_f0 = 1.2;    // initial horizon estimate (s)
  double alpha = 0.2;   // max update as a fraction of the current horizon
  double eps = 1e-6;    // |dC/dt_f| convergence threshold
  double eps0 = 0.3;    // gradient-descent -> quasi-Newton switch
  double dt = 5e-4;     // unified step size of the returned solution (s)
  int max_iterations = 100;

  void validate() const;
};

enum class UpdateMode { kGradientDescent, kQuasiNewton };

/// Raised by the secant update when the two gradients coincide.
class DegenerateSecant : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct FreeTimeSolution {
  DdpSolution solution;  // on the unified grid, dt == settings.dt
  double t_f = 0.0;      // multiple of settings.dt
  int outer_iterations = 0;
  std::vector<std::pair<double, double>> gradient_history;  // (t_f, dC/dt_f)
  bool converged = false;        // gradient criterion met and final solve converged
  bool hit_iteration_cap = false;
  bool at_lower_bound = false;   // stopped at the 2*dt guard with a positive gradient
};

/// Optional warm start: initial horizon and guess trajectory.
struct FreeTimeStart {
  double t_f = 0.0;
  DiscreteTrajectory guess;
};

/// Integral over the trajectory of H = L(x, u) + Vx . f(x, u), trapezoidal
/// on the knot grid, with Vx the DDP costates.
double terminal_time_gradient(const DdpSolution& sol, const CostSpec& cost,
                              const ModelSpec& model);

/// One horizon update. Gradient descent uses delta = g_k; quasi-Newton uses
/// the secant delta = (t_k - t_prev) / (g_k - g_prev) * g_k. The step size is
/// min(1, alpha |t_k| / |delta|).
double update_terminal_time(double t_k, double t_prev, double g_k, double g_prev, UpdateMode mode,
                            double alpha);

FreeTimeSolution solve_free_time(const ModelSpec& model, const CostSpec& cost, const StateVec& x0,
                                 const FreeTimeSettings& settings, const DdpSettings& ddp,
                                 const std::vector<int>& schedule,
                                 const std::optional<FreeTimeStart>& start = std::nullopt);

/// Levels used for the final solve on the unified grid: entries of
/// `schedule` below n_final, then n_final.
std::vector<int> final_schedule(const std::vector<int>& schedule, int n_final);

}  // namespace ftoc

#endif  // FTOC_FREETIME_HPP_
