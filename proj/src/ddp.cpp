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

#include "ftoc/ddp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

namespace ftoc {

DiscreteTrajectory DiscreteTrajectory::zeros(const StateVec& x0, int control_dim, double t_f,
                                             int n_steps) {
  return constant(x0, ControlVec::Zero(control_dim), t_f, n_steps);
}

DiscreteTrajectory DiscreteTrajectory::constant(const StateVec& x0, const ControlVec& u,
                                                double t_f, int n_steps) {
  require(n_steps > 0 && t_f > 0.0, "trajectory needs positive steps and horizon");
  DiscreteTrajectory t;
  t.dt = t_f / n_steps;
  t.states.assign(static_cast<std::size_t>(n_steps) + 1, x0);
  t.controls.assign(static_cast<std::size_t>(n_steps), u);
  return t;
}

void DdpSettings::validate() const {
  if (max_iterations <= 0 || !(tolerance > 0.0) || !(reg_init > 0.0) || !(reg_min > 0.0) ||
      !(reg_max > reg_min) || !(reg_factor > 1.0) || !(backtrack > 0.0 && backtrack < 1.0) ||
      !(armijo > 0.0) || !(min_step > 0.0) || !(divergence_norm > 0.0)) {
    throw ContractError("invalid DDP settings");
  }
}

double trajectory_cost(const ModelSpec& model, const CostSpec& cost,
                       const DiscreteTrajectory& traj) {
  double total = 0.0;
  for (int k = 0; k < traj.steps(); ++k) {
    total += running_cost(cost, model, traj.states[k], traj.controls[k]) * traj.dt;
  }
  return total + terminal_cost(cost, traj.states.back());
}

DiscreteTrajectory rollout(const ModelSpec& model, const StateVec& x0,
                           const std::vector<ControlVec>& controls, double dt) {
  DiscreteTrajectory t;
  t.dt = dt;
  t.controls = controls;
  t.states.reserve(controls.size() + 1);
  t.states.push_back(x0);
  for (const auto& u : controls) t.states.push_back(rk4_step(model, t.states.back(), u, dt));
  return t;
}

namespace {

template <typename Vec>
Vec interpolate(const std::vector<Vec>& knots, double s) {
  const int last = static_cast<int>(knots.size()) - 1;
  s = std::clamp(s, 0.0, static_cast<double>(last));
  const int lo = static_cast<int>(std::floor(s));
  const double frac = s - lo;
  if (frac == 0.0 || lo >= last) return knots[std::min(lo, last)];
  return (1.0 - frac) * knots[lo] + frac * knots[lo + 1];
}

}  // namespace

DiscreteTrajectory rescale_guess(const DiscreteTrajectory& traj, double new_tf, int new_n) {
  require(!traj.states.empty() && !traj.controls.empty(), "cannot rescale an empty trajectory");
  require(new_n > 0 && new_tf > 0.0, "rescale target must be positive");
  const int old_n = traj.steps();
  DiscreteTrajectory out;
  out.dt = new_tf / new_n;
  out.states.reserve(static_cast<std::size_t>(new_n) + 1);
  out.controls.reserve(static_cast<std::size_t>(new_n));
  out.states.push_back(traj.states.front());
  for (int i = 1; i <= new_n; ++i) {
    out.states.push_back(interpolate(traj.states, static_cast<double>(i) * old_n / new_n));
  }
  for (int i = 0; i < new_n; ++i) {
    out.controls.push_back(interpolate(traj.controls, static_cast<double>(i) * old_n / new_n));
  }
  return out;
}

namespace {

struct KnotExpansion {
  StateMat A;
  InputMat B;
  CostQuadratics l;  // already scaled by dt
};

struct BackwardResult {
  bool ok = false;
  std::vector<ControlVec> k;
  std::vector<GainMat> K;
  std::vector<StateVec> Vx;
  double dV1 = 0.0;  // sum k' Qu
  double dV2 = 0.0;  // sum 0.5 k' Quu k
};

class DdpSolver {
 public:
  DdpSolver(const FixedTimeProblem& p, const DdpSettings& s)
      : p_(p), s_(s), n_(p.model.state_dim()), m_(p.model.control_dim()), dt_(p.dt()) {}

  DdpSolution solve(const DiscreteTrajectory& guess) {
    DdpSolution sol;
    DiscreteTrajectory start = guess;
    if (start.steps() != p_.n_steps || std::abs(start.dt - dt_) > 1e-15 * std::max(1.0, dt_)) {
      start = rescale_guess(guess, p_.t_f, p_.n_steps);
    }
    for (const auto& u : start.controls) {
      if (u.size() != m_) throw ContractError("guess control dimension mismatch");
    }
    nominal_ = rollout(p_.model, p_.x0, start.controls, dt_);
    cost_ = safe_cost(nominal_);
    if (!std::isfinite(cost_)) {
      throw SolveDiverged("initial rollout produced a non-finite cost", DdpSolution{});
    }
    sol.cost_history.push_back(cost_);

    double reg = s_.reg_init;
    bool costates_current = false;
    BackwardResult bw;
    int iter = 0;
    while (iter < s_.max_iterations) {
      ++iter;
      expand();
      bw = backward(reg);
      sol.reg_history.push_back(reg);
      while (!bw.ok) {
        reg *= s_.reg_factor;
        if (reg > s_.reg_max) break;
        bw = backward(reg);
        sol.reg_history.push_back(reg);
      }
      if (!bw.ok) break;
      costates_current = true;

      const double expected_full = -(bw.dV1 + bw.dV2);
      if (expected_full <= s_.tolerance * std::abs(cost_)) {
        sol.converged = true;
        break;
      }

      const auto accepted = line_search(bw);
      if (!accepted) {
        reg *= s_.reg_factor;
        if (reg > s_.reg_max) break;
        continue;
      }
      const double improvement = cost_ - accepted->second;
      nominal_ = std::move(accepted->first);
      cost_ = accepted->second;
      costates_current = false;
      sol.cost_history.push_back(cost_);
      reg = std::max(s_.reg_min, reg / s_.reg_factor);
      if (improvement < s_.tolerance * std::abs(cost_)) {
        sol.converged = true;
        break;
      }
    }

    if (!costates_current) {
      expand();
      bw = backward(std::max(s_.reg_min, reg));
      if (!bw.ok) bw = backward(s_.reg_max);
    }
    sol.trajectory = nominal_;
    sol.costates = bw.ok ? bw.Vx : std::vector<StateVec>{};
    sol.total_cost = cost_;
    sol.iterations = iter;
    return sol;
  }

 private:
  double safe_cost(const DiscreteTrajectory& t) const {
    for (const auto& x : t.states) {
      if (!x.allFinite() || x.norm() > s_.divergence_norm) {
        return std::numeric_limits<double>::infinity();
      }
    }
    try {
      return trajectory_cost(p_.model, p_.cost, t);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  }

  void expand() {
    const int N = p_.n_steps;
    exp_.resize(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
      const StateVec& x = nominal_.states[k];
      const ControlVec& u = nominal_.controls[k];
      KnotExpansion& e = exp_[k];
      const double h = 1e-6 * std::max(1.0, x.norm());
      e.A.resize(n_, n_);
      e.B.resize(n_, m_);
      for (int i = 0; i < n_; ++i) {
        StateVec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        e.A.col(i) = (rk4_step(p_.model, xp, u, dt_) - rk4_step(p_.model, xm, u, dt_)) / (2 * h);
      }
      for (int i = 0; i < m_; ++i) {
        ControlVec up = u, um = u;
        up[i] += h;
        um[i] -= h;
        e.B.col(i) = (rk4_step(p_.model, x, up, dt_) - rk4_step(p_.model, x, um, dt_)) / (2 * h);
      }
      e.l = cost_quadratics(p_.cost, p_.model, x, u);
      e.l.L *= dt_;
      e.l.Lx *= dt_;
      e.l.Lu *= dt_;
      e.l.Lxx *= dt_;
      e.l.Lux *= dt_;
      e.l.Luu *= dt_;
    }
  }

  BackwardResult backward(double reg) const {
    const int N = p_.n_steps;
    BackwardResult r;
    r.k.resize(static_cast<std::size_t>(N));
    r.K.resize(static_cast<std::size_t>(N));
    r.Vx.resize(static_cast<std::size_t>(N) + 1);

    const StateVec& xN = nominal_.states.back();
    StateVec Vx = 2.0 * p_.cost.r_f * (xN - p_.cost.x_f);
    StateMat Vxx = StateMat::Identity(n_, n_) * (2.0 * p_.cost.r_f);
    r.Vx[N] = Vx;

    for (int k = N - 1; k >= 0; --k) {
      const KnotExpansion& e = exp_[k];
      const StateVec Qx = e.l.Lx + e.A.transpose() * Vx;
      const ControlVec Qu = e.l.Lu + e.B.transpose() * Vx;
      const InputMat VxxB = Vxx * e.B;
      StateMat Qxx = e.l.Lxx + e.A.transpose() * Vxx * e.A;
      ControlMat Quu = e.l.Luu + e.B.transpose() * VxxB;
      const GainMat Qux = e.l.Lux + VxxB.transpose() * e.A;

      ControlMat Quu_reg = Quu;
      Quu_reg.diagonal().array() += reg;
      Eigen::LLT<ControlMat> llt(Quu_reg);
      if (llt.info() != Eigen::Success) return r;

      const ControlVec kff = -llt.solve(Qu);
      const GainMat Kfb = -llt.solve(Qux);
      if (!kff.allFinite() || !Kfb.allFinite()) return r;

      r.dV1 += kff.dot(Qu);
      r.dV2 += 0.5 * kff.dot(Quu * kff);

      Vx = Qx + Kfb.transpose() * (Quu * kff) + Kfb.transpose() * Qu + Qux.transpose() * kff;
      Qxx.noalias() += Kfb.transpose() * Quu * Kfb;
      Qxx.noalias() += Kfb.transpose() * Qux;
      Qxx.noalias() += Qux.transpose() * Kfb;
      Vxx = 0.5 * (Qxx + Qxx.transpose());

      r.k[k] = kff;
      r.K[k] = Kfb;
      r.Vx[k] = Vx;
    }
    r.ok = true;
    return r;
  }

  std::optional<std::pair<DiscreteTrajectory, double>> line_search(const BackwardResult& bw) const {
    const int N = p_.n_steps;
    double alpha = s_.fault_line_search ? s_.backtrack : 1.0;
    DiscreteTrajectory trial;
    trial.dt = dt_;
    trial.states.resize(static_cast<std::size_t>(N) + 1);
    trial.controls.resize(static_cast<std::size_t>(N));
    while (alpha >= s_.min_step) {
      trial.states[0] = p_.x0;
      bool diverged = false;
      for (int k = 0; k < N; ++k) {
        const StateVec dx = trial.states[k] - nominal_.states[k];
        trial.controls[k] = nominal_.controls[k] + alpha * bw.k[k] + bw.K[k] * dx;
        trial.states[k + 1] = rk4_step(p_.model, trial.states[k], trial.controls[k], dt_);
        if (!trial.states[k + 1].allFinite() ||
            trial.states[k + 1].norm() > s_.divergence_norm) {
          diverged = true;
          break;
        }
      }
      if (!diverged) {
        const double new_cost = safe_cost(trial);
        const double expected = -(alpha * bw.dV1 + alpha * alpha * bw.dV2);
        if (std::isfinite(new_cost) && new_cost < cost_ &&
            (cost_ - new_cost) >= s_.armijo * expected) {
          return std::make_pair(trial, new_cost);
        }
      }
      alpha *= s_.backtrack;
    }
    return std::nullopt;
  }

  const FixedTimeProblem& p_;
  const DdpSettings& s_;
  const int n_;
  const int m_;
  const double dt_;
  DiscreteTrajectory nominal_;
  double cost_ = 0.0;
  std::vector<KnotExpansion> exp_;
};

}  // namespace

DdpSolution solve_fixed_time(const FixedTimeProblem& problem, const DiscreteTrajectory& guess,
                             const DdpSettings& settings) {
  settings.validate();
  require(problem.n_steps > 0 && problem.t_f > 0.0, "fixed-time problem needs t_f > 0, n > 0");
  require(problem.x0.size() == problem.model.state_dim(), "x0 dimension mismatch");
  if (!problem.x0.allFinite()) throw DomainError("non-finite initial state");
  return DdpSolver(problem, settings).solve(guess);
}

DdpSolution march_solve(const ModelSpec& model, const CostSpec& cost, const StateVec& x0,
                        double t_f, const std::vector<int>& schedule,
                        const DiscreteTrajectory& guess, const DdpSettings& settings) {
  require(!schedule.empty(), "marching schedule is empty");
  for (std::size_t j = 1; j < schedule.size(); ++j) {
    require(schedule[j] > schedule[j - 1], "marching schedule must be strictly increasing");
  }
  FixedTimeProblem problem{model, cost, x0, t_f, schedule.front()};
  DiscreteTrajectory warm = guess;
  DdpSolution best;
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    problem.n_steps = schedule[j];
    try {
      best = solve_fixed_time(problem, rescale_guess(warm, t_f, schedule[j]), settings);
    } catch (const SolveDiverged& e) {
      throw SolveDiverged("level " + std::to_string(j) + ": " + e.what(), best,
                          static_cast<int>(j));
    }
    warm = best.trajectory;
  }
  return best;
}

}  // namespace ftoc
