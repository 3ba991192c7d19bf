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

#include "ftoc/freetime.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ftoc {

void FreeTimeSettings::validate() const {
  if (!(t_f0 > 0.0) || !(alpha > 0.0 && alpha <= 1.0) || !(eps > 0.0) || !(eps0 > 0.0) ||
      !(dt > 0.0) || max_iterations <= 0) {
    throw ContractError("invalid free-time settings");
  }
}

double terminal_time_gradient(const DdpSolution& sol, const CostSpec& cost,
                              const ModelSpec& model) {
  const DiscreteTrajectory& traj = sol.trajectory;
  const int N = traj.steps();
  if (static_cast<int>(sol.costates.size()) != N + 1 || N == 0) {
    throw ContractError("terminal_time_gradient needs one costate per knot");
  }
  double integral = 0.0;
  for (int k = 0; k <= N; ++k) {
    const StateVec& x = traj.states[k];
    const ControlVec& u = traj.controls[std::min(k, N - 1)];
    const double H = running_cost(cost, model, x, u) + sol.costates[k].dot(vector_field(model, x, u));
    integral += (k == 0 || k == N) ? 0.5 * H : H;
  }
  return integral * traj.dt;
}

double update_terminal_time(double t_k, double t_prev, double g_k, double g_prev, UpdateMode mode,
                            double alpha) {
  double delta = g_k;
  if (mode == UpdateMode::kQuasiNewton) {
    if (g_k == g_prev) throw DegenerateSecant("secant update with equal gradients");
    delta = (t_k - t_prev) / (g_k - g_prev) * g_k;
  }
  if (delta == 0.0) return t_k;
  const double step = std::min(1.0, alpha * std::abs(t_k) / std::abs(delta));
  return t_k - step * delta;
}

std::vector<int> final_schedule(const std::vector<int>& schedule, int n_final) {
  std::vector<int> levels;
  for (int n : schedule) {
    if (n < n_final) levels.push_back(n);
  }
  levels.push_back(n_final);
  return levels;
}

FreeTimeSolution solve_free_time(const ModelSpec& model, const CostSpec& cost, const StateVec& x0,
                                 const FreeTimeSettings& settings, const DdpSettings& ddp,
                                 const std::vector<int>& schedule,
                                 const std::optional<FreeTimeStart>& start) {
  settings.validate();
  require(!schedule.empty(), "schedule is empty");
  if (x0.size() != model.state_dim()) throw ContractError("x0 dimension mismatch");
  if (!x0.allFinite()) throw DomainError("non-finite initial state");

  const double min_tf = 2.0 * settings.dt;
  double tf = std::max(min_tf, start ? start->t_f : settings.t_f0);
  DiscreteTrajectory guess = (start && !start->guess.controls.empty())
                                 ? start->guess
                                 : DiscreteTrajectory::zeros(x0, model.control_dim(), tf,
                                                             schedule.front());

  FreeTimeSolution out;
  bool gd = true;
  bool have_prev = false;
  double tf_prev = 0.0;
  double g_prev = 0.0;
  bool gradient_converged = false;
  DdpSolution current;
  for (int k = 1; k <= settings.max_iterations; ++k) {
    out.outer_iterations = k;
    try {
      current = march_solve(model, cost, x0, tf, schedule, guess, ddp);
    } catch (const SolveDiverged& e) {
      throw SolveDiverged("outer iteration " + std::to_string(k) + ", " + e.what(),
                          e.last_valid(), e.level());
    }
    const double g = terminal_time_gradient(current, cost, model);
    out.gradient_history.emplace_back(tf, g);

    if (std::abs(g) < settings.eps) {
      gradient_converged = true;
      break;
    }
    // Horizon pinned at the guard and still wanting to shrink: boundary optimum.
    if (g > 0.0 && tf <= min_tf * (1.0 + 1e-12)) {
      gradient_converged = true;
      out.at_lower_bound = true;
      break;
    }

    UpdateMode mode = UpdateMode::kGradientDescent;
    if (gd) {
      // A sign change brackets the root; the secant step is then reliable.
      if (have_prev && (g > 0.0) != (g_prev > 0.0)) {
        gd = false;
        mode = UpdateMode::kQuasiNewton;
      }
      if (std::abs(g) < settings.eps0) gd = false;
    } else {
      mode = UpdateMode::kQuasiNewton;
    }
    if (mode == UpdateMode::kQuasiNewton && have_prev) {
      // Secant curvature must be positive for a descent step.
      if (g == g_prev || (tf - tf_prev) / (g - g_prev) <= 0.0) {
        mode = UpdateMode::kGradientDescent;
      }
    } else {
      mode = UpdateMode::kGradientDescent;
    }

    double tf_next = update_terminal_time(tf, tf_prev, g, g_prev, mode, settings.alpha);
    tf_next = std::max(min_tf, tf_next);
    tf_prev = tf;
    g_prev = g;
    have_prev = true;
    guess = current.trajectory;
    if (tf_next == tf) {
      // No representable change left; treat as a stalled, unconverged run.
      break;
    }
    tf = tf_next;
  }
  out.hit_iteration_cap = !gradient_converged && out.outer_iterations >= settings.max_iterations;

  const int n_final = std::max(2, static_cast<int>(std::lround(tf / settings.dt)));
  out.t_f = n_final * settings.dt;
  try {
    out.solution = march_solve(model, cost, x0, out.t_f, final_schedule(schedule, n_final),
                               current.trajectory, ddp);
  } catch (const SolveDiverged& e) {
    throw SolveDiverged(std::string("final unified-grid solve, ") + e.what(), e.last_valid(),
                        e.level());
  }
  out.converged = gradient_converged && out.solution.converged;
  return out;
}

}  // namespace ftoc
