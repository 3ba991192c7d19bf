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

#include "ftoc/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "ftoc/parallel.hpp"

namespace ftoc {

void SolverConfig::validate() const {
  model.validate();
  cost.validate(model);
  ddp.validate();
  freetime.validate();
  require(!schedule.empty(), "marching schedule must not be empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    require(schedule[i] >= 1, "schedule levels must be positive");
    if (i > 0) require(schedule[i] > schedule[i - 1], "schedule must be increasing");
  }
}

Label solve_label(const SolverConfig& config, const StateVec& x0,
                  const std::optional<FreeTimeStart>& start) {
  Label out;
  out.x0 = x0;
  try {
    out.solution = solve_free_time(config.model, config.cost, x0, config.freetime, config.ddp,
                                   config.schedule, start);
    out.converged = out.solution.converged;
    if (!out.converged) {
      out.failure = out.solution.hit_iteration_cap ? "outer iteration cap reached"
                                                   : "final fixed-time solve did not converge";
    }
  } catch (const SolveDiverged& e) {
    out.failure = std::string("diverged: ") + e.what();
  } catch (const NumericalError& e) {
    out.failure = std::string("numerical: ") + e.what();
  } catch (const DegenerateSecant& e) {
    out.failure = std::string("degenerate secant: ") + e.what();
  }
  return out;
}

void append_records(Dataset& data, const FreeTimeSolution& sol, long traj_id, int iteration,
                    int root, double root_time) {
  const DiscreteTrajectory& tr = sol.solution.trajectory;
  for (int j = 0; j < tr.steps(); ++j) {
    Record r;
    r.x = tr.states[static_cast<std::size_t>(j)];
    r.u = tr.controls[static_cast<std::size_t>(j)];
    r.t_remaining = sol.t_f - j * tr.dt;
    r.traj_id = traj_id;
    r.knot = j;
    r.iteration = iteration;
    r.root = root;
    r.root_time = root_time;
    data.add(r);
  }
}

void IvpSettings::validate() const {
  if (!(dt_sim > 0.0) || !(horizon > 0.0) || !(eps_succ > 0.0)) {
    throw ContractError("IVP settings must be positive");
  }
}

IvpTrajectory simulate_ivp(const ModelSpec& model, const CostSpec& cost, const ControlLaw& law,
                           const StateVec& x0, const IvpSettings& settings) {
  settings.validate();
  IvpTrajectory out;
  const double h = settings.dt_sim;
  const long steps = std::lround(std::ceil(settings.horizon / h - 1e-9));
  StateVec x = x0;
  ControlVec u = law(0.0, x);
  out.times.push_back(0.0);
  out.states.push_back(x);
  out.controls.push_back(u);
  if ((x - cost.x_f).norm() <= settings.eps_succ) out.first_hit = 0.0;

  for (long s = 0; s < steps && !(out.first_hit && settings.stop_at_hit); ++s) {
    const double t = s * h;
    const StateVec k1 = vector_field(model, x, u);
    const StateVec x2 = x + 0.5 * h * k1;
    const StateVec k2 = vector_field(model, x2, law(t + 0.5 * h, x2));
    const StateVec x3 = x + 0.5 * h * k2;
    const StateVec k3 = vector_field(model, x3, law(t + 0.5 * h, x3));
    const StateVec x4 = x + h * k3;
    const StateVec k4 = vector_field(model, x4, law(t + h, x4));
    const StateVec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite() || next.norm() > 1e6) {
      out.diverged = true;
      break;
    }
    x = next;
    const double tn = (s + 1) * h;
    u = law(tn, x);
    if (!u.allFinite()) {
      out.diverged = true;
      break;
    }
    out.times.push_back(tn);
    out.states.push_back(x);
    out.controls.push_back(u);
    if (!out.first_hit && (x - cost.x_f).norm() <= settings.eps_succ) out.first_hit = tn;
  }

  if (out.first_hit) {
    double total = 0.0;
    const std::size_t last = static_cast<std::size_t>(std::lround(*out.first_hit / h));
    double prev = running_cost(cost, model, out.states[0], out.controls[0]);
    for (std::size_t j = 1; j <= last; ++j) {
      const double cur = running_cost(cost, model, out.states[j], out.controls[j]);
      total += 0.5 * h * (prev + cur);
      prev = cur;
    }
    out.realized_cost = total;
  }
  return out;
}

IvpTrajectory simulate_ivp(const ModelSpec& model, const CostSpec& cost, const Policy& policy,
                           const StateVec& x0, const IvpSettings& settings) {
  return simulate_ivp(
      model, cost, [&policy](double, const StateVec& x) { return policy.control(x); }, x0,
      settings);
}

StateVec optimal_state_at(const DiscreteTrajectory& opt, const StateVec& x_f, double t) {
  require(!opt.empty(), "optimal trajectory is empty");
  const int n = opt.steps();
  if (n == 0 || t <= 0.0) return t > opt.final_time() ? x_f : opt.states.front();
  if (t > opt.final_time()) return x_f;
  const double pos = std::min(t / opt.dt, static_cast<double>(n));
  const int lo = std::min(static_cast<int>(std::floor(pos)), n);
  const double frac = pos - lo;
  if (lo >= n || frac == 0.0) return opt.states[static_cast<std::size_t>(lo)];
  return (1.0 - frac) * opt.states[static_cast<std::size_t>(lo)] +
         frac * opt.states[static_cast<std::size_t>(lo + 1)];
}

std::optional<ResamplePoint> find_resample_state(const IvpTrajectory& ivp,
                                                 const DiscreteTrajectory& opt,
                                                 const StateVec& x_f, double tau) {
  for (std::size_t j = 0; j < ivp.states.size(); ++j) {
    const StateVec ref = optimal_state_at(opt, x_f, ivp.times[j]);
    if ((ivp.states[j] - ref).norm() > tau) {
      return ResamplePoint{static_cast<int>(j), ivp.times[j], ivp.states[j]};
    }
  }
  return std::nullopt;
}

std::vector<ResamplePoint> fractional_states(const IvpTrajectory& ivp, double t_f,
                                             const std::vector<double>& fractions) {
  std::vector<ResamplePoint> out;
  if (ivp.times.size() < 2) return out;
  const double h = ivp.times[1] - ivp.times[0];
  for (double f : fractions) {
    const long j = std::lround(f * t_f / h);
    if (j < 0 || j >= static_cast<long>(ivp.states.size())) continue;
    const auto idx = static_cast<std::size_t>(j);
    out.push_back({static_cast<int>(j), ivp.times[idx], ivp.states[idx]});
  }
  return out;
}

std::string to_string(Strategy s) { return s == Strategy::kIvpArt ? "ivp-art" : "dagger"; }

Strategy strategy_from_string(const std::string& name) {
  if (name == "ivp-art") return Strategy::kIvpArt;
  if (name == "dagger") return Strategy::kDagger;
  throw DomainError("unknown strategy: " + name);
}

std::string to_string(DatasetMode m) { return m == DatasetMode::kUnion ? "union" : "replacement"; }

DatasetMode dataset_mode_from_string(const std::string& name) {
  if (name == "union") return DatasetMode::kUnion;
  if (name == "replacement") return DatasetMode::kReplacement;
  throw DomainError("unknown dataset mode: " + name);
}

void AdaptiveSettings::validate() const {
  require(iterations >= 1, "adaptive loop needs K >= 1");
  require(tau > 0.0, "tau must be positive");
  for (double f : fractions) require(f > 0.0 && f < 1.0, "grid fractions must lie in (0, 1)");
  ivp.validate();
  train.validate();
  if (architecture == Architecture::kQrnet) {
    require(surrogate.has_value() && surrogate->table, "QRnet training needs an LQR surrogate");
  }
}

std::vector<Policy> AdaptiveResult::ensemble_members() const {
  if (policies.size() <= 1) return policies;
  return {policies.begin() + 1, policies.end()};
}

std::uint64_t iteration_seed(std::uint64_t seed, int k) {
  // splitmix64 finalizer.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Policy train_iteration(const AdaptiveSettings& s, const SolverConfig& solver, const Dataset& data,
                       const Dataset& val, int k) {
  TrainConfig tc = s.train;
  tc.seed = iteration_seed(s.seed, k);
  return fit_policy(s.architecture, data, val, tc, solver.cost.x_f, solver.cost.u_f, s.surrogate);
}

// Horizon guess t_f*(x0) - t and the optimal tail after t. Falls back to a
// cold start when little or nothing of the optimal trajectory remains.
std::optional<FreeTimeStart> warm_start(const Root& root, double t, double dt_unified) {
  const double remaining = root.t_f - t;
  if (remaining < 4.0 * dt_unified) return std::nullopt;
  const DiscreteTrajectory& opt = root.optimal;
  const int j0 = static_cast<int>(std::ceil(t / opt.dt - 1e-9));
  if (j0 >= opt.steps()) return std::nullopt;
  FreeTimeStart start;
  start.t_f = remaining;
  start.guess.dt = opt.dt;
  start.guess.states.assign(opt.states.begin() + j0, opt.states.end());
  start.guess.controls.assign(opt.controls.begin() + j0, opt.controls.end());
  return start;
}

struct Sample {
  int root = 0;
  int slot = 0;
  ResamplePoint point;
};

}  // namespace

AdaptiveResult run_adaptive(const SolverConfig& solver, const AdaptiveSettings& settings,
                            const std::vector<Root>& roots, const Dataset& initial,
                            const Dataset& val,
                            const std::function<void(const IterationState&)>& observer) {
  settings.validate();
  require(!roots.empty(), "adaptive loop needs at least one initial state");
  require(!initial.empty(), "initial dataset is empty");

  AdaptiveResult result;
  result.dataset = initial;
  result.policies.push_back(settings.initial_policy
                                ? *settings.initial_policy
                                : train_iteration(settings, solver, result.dataset, val, 0));
  result.sample_counts.push_back(0);
  result.failed_solves.push_back(0);
  if (observer) {
    IterationState st;
    st.dataset = &result.dataset;
    st.policy = &result.policies.back();
    observer(st);
  }

  const double dt_unified = solver.freetime.dt;
  for (int k = 1; k <= settings.iterations; ++k) {
    const Policy& prev = result.policies.back();

    std::vector<std::vector<ResamplePoint>> per_root(roots.size());
    parallel_for(roots.size(), settings.workers, [&](std::size_t i) {
      const IvpTrajectory ivp =
          simulate_ivp(solver.model, solver.cost, prev, roots[i].x0, settings.ivp);
      if (settings.strategy == Strategy::kIvpArt) {
        if (auto p = find_resample_state(ivp, roots[i].optimal, solver.cost.x_f, settings.tau)) {
          per_root[i].push_back(*p);
        }
      } else {
        per_root[i] = fractional_states(ivp, roots[i].t_f, settings.fractions);
      }
    });

    std::vector<Sample> samples;
    for (std::size_t i = 0; i < roots.size(); ++i) {
      for (std::size_t j = 0; j < per_root[i].size(); ++j) {
        samples.push_back({static_cast<int>(i), static_cast<int>(j), per_root[i][j]});
      }
    }

    std::vector<Label> labels(samples.size());
    parallel_for(samples.size(), settings.workers, [&](std::size_t j) {
      const Sample& s = samples[j];
      labels[j] = solve_label(solver, s.point.x,
                              warm_start(roots[static_cast<std::size_t>(s.root)], s.point.t, dt_unified));
    });

    IterationState st;
    st.k = k;
    st.solves = static_cast<int>(samples.size());
    std::vector<double> cut(roots.size(), INFINITY);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const Sample& s = samples[j];
      st.samples.push_back(s.point.x);
      if (!labels[j].converged) {
        ++st.failed_solves;
        continue;
      }
      const long id = static_cast<long>(k) * 1000000L + s.root * 10L + s.slot;
      append_records(st.new_records, labels[j].solution, id, k, s.root, s.point.t);
      cut[static_cast<std::size_t>(s.root)] =
          std::min(cut[static_cast<std::size_t>(s.root)], s.point.t);
    }
    if (!samples.empty() && st.failed_solves == st.solves) {
      throw IterationError("iteration " + std::to_string(k) + ": all " +
                               std::to_string(st.solves) + " resample solves failed (first: " +
                               labels.front().failure + ")",
                           k);
    }

    if (settings.mode == DatasetMode::kReplacement) {
      result.dataset.remove_if([&](const Record& r) {
        if (r.root < 0 || static_cast<std::size_t>(r.root) >= cut.size()) return false;
        const double t = r.root_time + r.knot * dt_unified;
        return t >= cut[static_cast<std::size_t>(r.root)] - 1e-12;
      });
    }
    result.dataset.merge(st.new_records);

    result.policies.push_back(train_iteration(settings, solver, result.dataset, val, k));
    result.sample_counts.push_back(st.solves);
    result.failed_solves.push_back(st.failed_solves);
    if (observer) {
      st.dataset = &result.dataset;
      st.policy = &result.policies.back();
      observer(st);
    }
  }
  return result;
}

}  // namespace ftoc
