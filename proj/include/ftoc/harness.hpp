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

// Experiment orchestration: initial-state sampling, dataset generation,
// closed-loop evaluation and the adaptive-sampling benchmark.

#ifndef FTOC_HARNESS_HPP_
#define FTOC_HARNESS_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ftoc/config.hpp"
#include "ftoc/io.hpp"
#include "ftoc/sampling.hpp"

namespace ftoc {

/// q uniform in the cube of side `side` centered at q_c, v = 0.
std::vector<StateVec> sample_initial_states(const RunConfig& config, int count, std::uint64_t seed);

struct GeneratedData {
  Dataset data;
  std::vector<Label> labels;     // one per input state
  std::vector<Root> roots;       // converged labels only
  std::vector<int> root_index;   // input index of each root
  int converged = 0;
  double max_t_f = 0.0;
  nlohmann::json report;
};

/// One free-time solve per state. Trajectory ids are id_offset + input
/// index; record roots index into `roots`.
GeneratedData generate_dataset(const SolverConfig& solver, const std::vector<StateVec>& states,
                               int workers, long id_offset = 0);

/// Optimal running cost, i.e. the solver's objective without the terminal
/// penalty.
double optimal_running_cost(const CostSpec& cost, const FreeTimeSolution& sol);

/// Open-loop replay of an optimal solution: piecewise-linear through the
/// interval midpoints of the held controls, u_f after t_f.
ControlLaw replay_law(const FreeTimeSolution& sol, const ControlVec& u_f);

struct Metrics {
  std::vector<double> ratios;  // capped
  std::vector<char> success;
  double success_rate = 0.0;
  double mean_ratio = 0.0;
  double std_ratio = 0.0;
  int n_fail = 0;
  int n_diverged = 0;
};

struct EvalSettings {
  IvpSettings ivp;
  double cap_fail = 10.0;
  double cap_success = 5.0;
  int workers = 1;
};

/// Simulates law_for(i) from states[i]. Success iff the ball of radius
/// eps_succ is reached within the horizon; ratio = realized / optimal
/// running cost, 10 on failure, capped at 5 for costly successes.
Metrics evaluate_controller(const ModelSpec& model, const CostSpec& cost,
                            const std::function<ControlLaw(std::size_t)>& law_for,
                            const std::vector<StateVec>& states,
                            const std::vector<double>& optimal_costs, const EvalSettings& settings);

Metrics evaluate_policy(const ModelSpec& model, const CostSpec& cost, const Policy& policy,
                        const std::vector<StateVec>& states, const std::vector<double>& optimal_costs,
                        const EvalSettings& settings);

Metrics evaluate_ensemble(const ModelSpec& model, const CostSpec& cost,
                          const std::vector<Policy>& members, const std::vector<StateVec>& states,
                          const std::vector<double>& optimal_costs, const EvalSettings& settings);

/// Right-continuous empirical CDF: one point per distinct ratio.
std::vector<std::pair<double, double>> cost_ratio_cdf(const std::vector<double>& ratios);

LqrSurrogate make_surrogate(const RunConfig& config);

AdaptiveSettings adaptive_settings(const RunConfig& config, Strategy strategy, Architecture arch,
                                   std::uint64_t seed, const std::optional<LqrSurrogate>& surrogate,
                                   const IvpSettings& ivp);

/// Labeled train/val/test sets of one benchmark trial.
struct TrialData {
  GeneratedData train;
  GeneratedData val;
  std::vector<StateVec> test_states;  // converged test states only
  std::vector<double> test_costs;
  int test_failures = 0;
  IvpSettings ivp;  // horizon resolved from the training set
};

TrialData prepare_trial(const RunConfig& config, std::uint64_t seed);

struct StrategyOutcome {
  AdaptiveResult result;
  std::vector<Metrics> iterations;  // u^0 .. u^K
  Metrics ensemble;
};

/// Runs one adaptive strategy and evaluates every iterate and the ensemble.
/// Writes per-iteration artifacts under `out_dir` when it is non-empty.
StrategyOutcome run_strategy(const RunConfig& config, const TrialData& trial, Strategy strategy,
                             Architecture arch, std::uint64_t seed,
                             const std::optional<LqrSurrogate>& surrogate,
                             std::shared_ptr<const Policy> initial_policy = nullptr,
                             const std::string& out_dir = "");

MetricsRow metrics_row(const std::string& iteration, const std::string& strategy, std::uint64_t seed,
                       const Metrics& m);

std::vector<MetricsRow> outcome_rows(const StrategyOutcome& outcome, const std::string& strategy,
                                     std::uint64_t seed);

struct BenchmarkResult {
  std::vector<MetricsRow> rows;
  std::vector<std::uint64_t> seeds;
  // outcomes[s][i]: seed s, strategy i
  std::vector<std::vector<StrategyOutcome>> outcomes;
};

/// Runs the listed strategies for every seed. All strategies of a seed share
/// the labeled data and the initial policy u^0.
BenchmarkResult run_benchmark(const RunConfig& config, const std::vector<std::uint64_t>& seeds,
                              const std::vector<Strategy>& strategies, Architecture arch,
                              const std::string& out_dir = "");

}  // namespace ftoc

#endif  // FTOC_HARNESS_HPP_
