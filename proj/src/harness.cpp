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

#include "ftoc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "ftoc/parallel.hpp"

namespace ftoc {

using nlohmann::json;

std::vector<StateVec> sample_initial_states(const RunConfig& config, int count, std::uint64_t seed) {
  require(count > 0, "sample count must be positive");
  const int dof = config.solver.model.dof;
  require(static_cast<int>(config.experiment.q_c.size()) == dof, "q_c has the wrong length");
  std::mt19937_64 rng(seed);
  std::vector<StateVec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    StateVec x = StateVec::Zero(2 * dof);
    for (int d = 0; d < dof; ++d) {
      x[d] = config.experiment.q_c[static_cast<std::size_t>(d)] +
             config.experiment.side * (uniform01(rng) - 0.5);
    }
    out.push_back(x);
  }
  return out;
}

GeneratedData generate_dataset(const SolverConfig& solver, const std::vector<StateVec>& states,
                               int workers, long id_offset) {
  require(!states.empty(), "no states to label");
  GeneratedData g;
  g.labels.resize(states.size());
  parallel_for(states.size(), workers,
               [&](std::size_t i) { g.labels[i] = solve_label(solver, states[i]); });

  json failures = json::array();
  json t_fs = json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Label& l = g.labels[i];
    if (!l.converged) {
      json x = json::array();
      for (Eigen::Index d = 0; d < states[i].size(); ++d) x.push_back(states[i][d]);
      failures.push_back({{"index", i}, {"x0", x}, {"reason", l.failure}});
      continue;
    }
    const int root = static_cast<int>(g.roots.size());
    append_records(g.data, l.solution, id_offset + static_cast<long>(i), 0, root, 0.0);
    g.roots.push_back({states[i], l.solution.solution.trajectory, l.solution.t_f});
    g.root_index.push_back(static_cast<int>(i));
    g.max_t_f = std::max(g.max_t_f, l.solution.t_f);
    t_fs.push_back(l.solution.t_f);
    ++g.converged;
  }
  g.report = {{"n_states", states.size()},
              {"n_converged", g.converged},
              {"convergence_rate", static_cast<double>(g.converged) / static_cast<double>(states.size())},
              {"n_records", g.data.size()},
              {"max_t_f", g.max_t_f},
              {"t_f", t_fs},
              {"failures", failures}};
  return g;
}

double optimal_running_cost(const CostSpec& cost, const FreeTimeSolution& sol) {
  return sol.solution.total_cost - terminal_cost(cost, sol.solution.trajectory.states.back());
}

ControlLaw replay_law(const FreeTimeSolution& sol, const ControlVec& u_f) {
  const DiscreteTrajectory tr = sol.solution.trajectory;
  const double t_f = sol.t_f;
  return [tr, t_f, u_f](double t, const StateVec&) -> ControlVec {
    const int n = tr.steps();
    if (n == 0 || t > t_f) return u_f;
    const double p = t / tr.dt - 0.5;
    if (p <= 0.0) return tr.controls.front();
    const int j = static_cast<int>(std::floor(p));
    if (j >= n - 1) return tr.controls.back();
    const double f = p - j;
    return (1.0 - f) * tr.controls[static_cast<std::size_t>(j)] +
           f * tr.controls[static_cast<std::size_t>(j + 1)];
  };
}

Metrics evaluate_controller(const ModelSpec& model, const CostSpec& cost,
                            const std::function<ControlLaw(std::size_t)>& law_for,
                            const std::vector<StateVec>& states,
                            const std::vector<double>& optimal_costs, const EvalSettings& settings) {
  if (optimal_costs.size() != states.size()) {
    throw ContractError("every test state needs an optimal cost");
  }
  for (double c : optimal_costs) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ContractError("optimal costs must be positive");
  }
  Metrics m;
  const std::size_t n = states.size();
  m.ratios.assign(n, settings.cap_fail);
  m.success.assign(n, 0);
  std::vector<char> diverged(n, 0);
  IvpSettings ivp = settings.ivp;
  ivp.stop_at_hit = true;
  parallel_for(n, settings.workers, [&](std::size_t i) {
    const IvpTrajectory tr = simulate_ivp(model, cost, law_for(i), states[i], ivp);
    diverged[i] = tr.diverged ? 1 : 0;
    if (tr.first_hit) {
      m.success[i] = 1;
      m.ratios[i] = std::min(settings.cap_success, *tr.realized_cost / optimal_costs[i]);
    }
  });
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += m.ratios[i];
    if (!m.success[i]) ++m.n_fail;
    if (diverged[i]) ++m.n_diverged;
  }
  if (n > 0) {
    m.success_rate = static_cast<double>(n - static_cast<std::size_t>(m.n_fail)) / static_cast<double>(n);
    m.mean_ratio = sum / static_cast<double>(n);
    double var = 0.0;
    for (double r : m.ratios) var += (r - m.mean_ratio) * (r - m.mean_ratio);
    m.std_ratio = std::sqrt(var / static_cast<double>(n));
  }
  return m;
}

Metrics evaluate_policy(const ModelSpec& model, const CostSpec& cost, const Policy& policy,
                        const std::vector<StateVec>& states, const std::vector<double>& optimal_costs,
                        const EvalSettings& settings) {
  return evaluate_controller(
      model, cost,
      [&policy](std::size_t) -> ControlLaw {
        return [&policy](double, const StateVec& x) { return policy.control(x); };
      },
      states, optimal_costs, settings);
}

Metrics evaluate_ensemble(const ModelSpec& model, const CostSpec& cost,
                          const std::vector<Policy>& members, const std::vector<StateVec>& states,
                          const std::vector<double>& optimal_costs, const EvalSettings& settings) {
  require(!members.empty(), "ensemble needs at least one member");
  return evaluate_controller(
      model, cost,
      [&members](std::size_t) -> ControlLaw {
        return [&members](double, const StateVec& x) { return ensemble_forward(members, x); };
      },
      states, optimal_costs, settings);
}

std::vector<std::pair<double, double>> cost_ratio_cdf(const std::vector<double>& ratios) {
  require(!ratios.empty(), "cost ratio CDF needs at least one ratio");
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

LqrSurrogate make_surrogate(const RunConfig& config) {
  auto table = std::make_shared<const RiccatiTable>(
      build_riccati_table(config.solver.model, config.solver.cost, config.lqr.horizon, config.lqr.step));
  return {table, config.lqr.blend,
          Saturation::uniform(config.solver.cost.u_f, config.lqr.u_min, config.lqr.u_max)};
}

AdaptiveSettings adaptive_settings(const RunConfig& config, Strategy strategy, Architecture arch,
                                   std::uint64_t seed, const std::optional<LqrSurrogate>& surrogate,
                                   const IvpSettings& ivp) {
  AdaptiveSettings s;
  s.strategy = strategy;
  s.iterations = config.sampling.iterations;
  s.tau = config.sampling.tau;
  s.mode = config.sampling.mode;
  s.fractions = config.sampling.fractions;
  s.ivp = ivp;
  s.architecture = arch;
  s.train = config.training;
  if (arch == Architecture::kQrnet) s.surrogate = surrogate;
  s.workers = config.workers;
  s.seed = seed;
  return s;
}

TrialData prepare_trial(const RunConfig& config, std::uint64_t seed) {
  const ExperimentConfig& e = config.experiment;
  const std::vector<StateVec> all =
      sample_initial_states(config, e.n_train + e.n_val + e.n_test, seed);
  const auto split = [&](int from, int count) {
    return std::vector<StateVec>(all.begin() + from, all.begin() + from + count);
  };
  TrialData t;
  t.train = generate_dataset(config.solver, split(0, e.n_train), config.workers, 0);
  if (t.train.converged == 0) throw NumericalError("no training state converged");
  if (e.n_val > 0) t.val = generate_dataset(config.solver, split(e.n_train, e.n_val), config.workers, 0);
  const GeneratedData test =
      generate_dataset(config.solver, split(e.n_train + e.n_val, e.n_test), config.workers, 0);
  for (std::size_t i = 0; i < test.labels.size(); ++i) {
    if (!test.labels[i].converged) {
      ++t.test_failures;
      continue;
    }
    t.test_states.push_back(test.labels[i].x0);
    t.test_costs.push_back(optimal_running_cost(config.solver.cost, test.labels[i].solution));
  }
  t.ivp = config.sampling.ivp;
  if (!config.sampling.horizon_explicit) {
    t.ivp.horizon = config.sampling.horizon_factor * t.train.max_t_f;
  }
  return t;
}

MetricsRow metrics_row(const std::string& iteration, const std::string& strategy, std::uint64_t seed,
                       const Metrics& m) {
  return {iteration, strategy, seed, m.success_rate, m.mean_ratio, m.std_ratio, m.n_fail, m.n_diverged};
}

std::vector<MetricsRow> outcome_rows(const StrategyOutcome& outcome, const std::string& strategy,
                                     std::uint64_t seed) {
  std::vector<MetricsRow> rows;
  for (std::size_t k = 0; k < outcome.iterations.size(); ++k) {
    rows.push_back(metrics_row(std::to_string(k), strategy, seed, outcome.iterations[k]));
  }
  rows.push_back(metrics_row("ensemble", strategy, seed, outcome.ensemble));
  return rows;
}

StrategyOutcome run_strategy(const RunConfig& config, const TrialData& trial, Strategy strategy,
                             Architecture arch, std::uint64_t seed,
                             const std::optional<LqrSurrogate>& surrogate,
                             std::shared_ptr<const Policy> initial_policy, const std::string& out_dir) {
  AdaptiveSettings s = adaptive_settings(config, strategy, arch, seed, surrogate, trial.ivp);
  s.initial_policy = std::move(initial_policy);
  EvalSettings ev{trial.ivp, config.experiment.ratio_cap_fail, config.experiment.ratio_cap_success,
                  config.workers};
  const auto& model = config.solver.model;
  const auto& cost = config.solver.cost;
  const std::string name = to_string(strategy);

  StrategyOutcome out;
  if (!out_dir.empty()) ensure_directory(out_dir);
  auto observer = [&](const IterationState& st) {
    const Metrics m = evaluate_policy(model, cost, *st.policy, trial.test_states, trial.test_costs, ev);
    out.iterations.push_back(m);
    if (out_dir.empty()) return;
    const std::string stem = out_dir + "/iter" + std::to_string(st.k);
    save_states(stem + "_samples.ndjson", st.samples);
    save_dataset(stem + "_labels.ndjson", st.new_records);
    save_policy(stem + "_policy.json", *st.policy);
    save_metrics_csv(stem + "_metrics.csv", {metrics_row(std::to_string(st.k), name, seed, m)});
  };
  out.result = run_adaptive(config.solver, s, trial.train.roots, trial.train.data, trial.val.data, observer);
  out.ensemble = evaluate_ensemble(model, cost, out.result.ensemble_members(), trial.test_states,
                                   trial.test_costs, ev);
  if (!out_dir.empty()) {
    save_metrics_csv(out_dir + "/metrics.csv", outcome_rows(out, name, seed));
    std::ofstream cdf(out_dir + "/ensemble_cdf.csv");
    write_cdf_csv(cdf, cost_ratio_cdf(out.ensemble.ratios));
  }
  return out;
}

BenchmarkResult run_benchmark(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
                              const std::vector<Strategy>& strategies, Architecture arch,
                              const std::string& out_dir) {
  require(!seeds.empty() && !strategies.empty(), "benchmark needs seeds and strategies");
  BenchmarkResult b;
  b.seeds = seeds;
  std::optional<LqrSurrogate> surrogate;
  if (arch == Architecture::kQrnet) surrogate = make_surrogate(config);
  for (std::uint64_t seed : seeds) {
    const TrialData trial = prepare_trial(config, seed);
    TrainConfig tc = config.training;
    tc.seed = iteration_seed(seed, 0);
    auto initial = std::make_shared<const Policy>(fit_policy(
        arch, trial.train.data, trial.val.data, tc, config.solver.cost.x_f, config.solver.cost.u_f, surrogate));
    std::vector<StrategyOutcome> per_seed;
    for (Strategy st : strategies) {
      const std::string dir =
          out_dir.empty() ? "" : out_dir + "/seed" + std::to_string(seed) + "/" + to_string(st);
      per_seed.push_back(run_strategy(config, trial, st, arch, seed, surrogate, initial, dir));
      const auto rows = outcome_rows(per_seed.back(), to_string(st), seed);
      b.rows.insert(b.rows.end(), rows.begin(), rows.end());
    }
    b.outcomes.push_back(std::move(per_seed));
  }
  if (!out_dir.empty()) save_metrics_csv(out_dir + "/metrics.csv", b.rows);
  return b;
}

}  // namespace ftoc
