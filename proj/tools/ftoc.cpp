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

// Command-line front end.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ftoc/config.hpp"
#include "ftoc/harness.hpp"
#include "ftoc/io.hpp"
#include "ftoc/oracle.hpp"

namespace {

using namespace ftoc;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> workers;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig c = g.config_path.empty() ? default_config() : load_config(g.config_path);
  if (const char* env = std::getenv("FTOC_WORKERS")) c.workers = std::max(1, std::atoi(env));
  if (g.workers) c.workers = *g.workers;
  if (g.seed) c.experiment.seed = *g.seed;
  c.validate();
  return c;
}

std::vector<std::uint64_t> resolve_seeds(const Globals& g, const RunConfig& c) {
  if (g.seed) return {*g.seed};
  return c.experiment.seeds;
}

Architecture resolve_arch(const std::string& name, const RunConfig& c) {
  return name.empty() ? c.experiment.architecture : architecture_from_string(name);
}

int cmd_gen_data(const Globals& g, int count, const std::string& name) {
  const RunConfig c = resolve_config(g);
  ensure_directory(g.out);
  const auto states =
      sample_initial_states(c, count > 0 ? count : c.experiment.n_train, c.experiment.seed);
  const GeneratedData data = generate_dataset(c.solver, states, c.workers);
  save_states(g.out + "/" + name + "_states.ndjson", states);
  save_dataset(g.out + "/" + name + ".ndjson", data.data);
  nlohmann::json report = data.report;
  report["seed"] = c.experiment.seed;
  save_json(g.out + "/" + name + ".report.json", report);
  std::cout << name << ": " << data.converged << "/" << states.size() << " converged, "
            << data.data.size() << " records\n";
  return 0;
}

int cmd_train(const Globals& g, const std::string& data_path, const std::string& val_path,
              const std::string& arch_name) {
  const RunConfig c = resolve_config(g);
  const Architecture arch = resolve_arch(arch_name, c);
  const Dataset train = load_dataset(data_path);
  const Dataset val = val_path.empty() ? Dataset() : load_dataset(val_path);
  TrainConfig tc = c.training;
  tc.seed = c.experiment.seed;
  std::optional<LqrSurrogate> surrogate;
  if (arch == Architecture::kQrnet) surrogate = make_surrogate(c);
  TrainReport control, time;
  const Policy policy = fit_policy(arch, train, val, tc, c.solver.cost.x_f, c.solver.cost.u_f,
                                   surrogate, &control, &time);
  ensure_directory(g.out);
  save_policy(g.out + "/policy.json", policy);
  auto report_json = [](const TrainReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& p : r.checks) {
      checks.push_back({{"epoch", p.epoch}, {"train_loss", p.train_loss}, {"val_loss", p.val_loss}});
    }
    return nlohmann::json{{"best_val_loss", r.best_val_loss}, {"best_epoch", r.best_epoch},
                          {"checks", checks}};
  };
  nlohmann::json report{{"architecture", to_string(arch)}, {"seed", tc.seed},
                        {"n_train", train.size()}, {"n_val", val.size()},
                        {"control", report_json(control)}};
  if (arch == Architecture::kQrnet) report["time"] = report_json(time);
  save_json(g.out + "/train_report.json", report);
  std::cout << "trained " << to_string(arch) << " on " << train.size()
            << " records, best validation loss " << control.best_val_loss << "\n";
  return 0;
}

int cmd_adaptive(const Globals& g, Strategy strategy, const std::string& arch_name) {
  const RunConfig c = resolve_config(g);
  const Architecture arch = resolve_arch(arch_name, c);
  const BenchmarkResult b = run_benchmark(c, resolve_seeds(g, c), {strategy}, arch, g.out);
  for (const auto& row : b.rows) {
    std::cout << row.strategy << " seed " << row.seed << " iteration " << row.iteration
              << ": success " << row.success_rate << ", ratio " << row.mean_ratio << "\n";
  }
  return 0;
}

int cmd_eval(const Globals& g, const std::vector<std::string>& policy_paths,
             const std::string& states_path) {
  const RunConfig c = resolve_config(g);
  std::vector<Policy> members;
  for (const auto& p : policy_paths) members.push_back(load_policy(p));
  const std::vector<StateVec> candidates =
      states_path.empty() ? sample_initial_states(c, c.experiment.n_test, c.experiment.seed)
                          : load_states(states_path);
  const GeneratedData labels = generate_dataset(c.solver, candidates, c.workers);
  std::vector<StateVec> states;
  std::vector<double> costs;
  double max_t_f = 0.0;
  for (const auto& l : labels.labels) {
    if (!l.converged) continue;
    states.push_back(l.x0);
    costs.push_back(optimal_running_cost(c.solver.cost, l.solution));
    max_t_f = std::max(max_t_f, l.solution.t_f);
  }
  if (states.empty()) throw NumericalError("no evaluation state could be labeled");
  EvalSettings ev{c.sampling.ivp, c.experiment.ratio_cap_fail, c.experiment.ratio_cap_success,
                  c.workers};
  if (!c.sampling.horizon_explicit) ev.ivp.horizon = c.sampling.horizon_factor * max_t_f;
  const Metrics m = members.size() == 1
                        ? evaluate_policy(c.solver.model, c.solver.cost, members.front(), states, costs, ev)
                        : evaluate_ensemble(c.solver.model, c.solver.cost, members, states, costs, ev);
  ensure_directory(g.out);
  const std::string label = members.size() == 1 ? "single" : "ensemble";
  save_metrics_csv(g.out + "/metrics.csv", {metrics_row(label, "eval", c.experiment.seed, m)});
  std::ofstream cdf(g.out + "/cdf.csv");
  write_cdf_csv(cdf, cost_ratio_cdf(m.ratios));
  std::cout << label << ": success " << m.success_rate << ", mean ratio " << m.mean_ratio << " +- "
            << m.std_ratio << " over " << states.size() << " states (" << labels.labels.size() - states.size()
            << " unlabeled)\n";
  return 0;
}

// Mean and population std of a metric across seeds, per (strategy, iteration).
int cmd_plot(const Globals& g, const std::vector<std::string>& metrics_paths,
             const std::string& policy_path, const std::string& states_path) {
  ensure_directory(g.out);
  if (!metrics_paths.empty()) {
    std::map<std::pair<std::string, std::string>, std::vector<MetricsRow>> groups;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& path : metrics_paths) {
      for (const auto& row : load_metrics_csv(path)) {
        const auto key = std::make_pair(row.strategy, row.iteration);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(row);
      }
    }
    std::ofstream out(g.out + "/summary.csv");
    out << "strategy,iteration,n_seeds,success_mean,success_std,ratio_mean,ratio_std\n";
    auto stats = [](const std::vector<double>& v) {
      double mean = 0.0, var = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) var += (x - mean) * (x - mean);
      return std::make_pair(mean, std::sqrt(var / static_cast<double>(v.size())));
    };
    char buf[256];
    for (const auto& key : order) {
      std::vector<double> succ, ratio;
      for (const auto& r : groups[key]) {
        succ.push_back(r.success_rate);
        ratio.push_back(r.mean_ratio);
      }
      const auto [sm, ss] = stats(succ);
      const auto [rm, rs] = stats(ratio);
      std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.10g,%.10g,%.10g,%.10g\n", key.first.c_str(),
                    key.second.c_str(), succ.size(), sm, ss, rm, rs);
      out << buf;
    }
    std::cout << "wrote " << g.out << "/summary.csv (" << order.size() << " groups)\n";
  }
  if (!policy_path.empty()) {
    const RunConfig c = resolve_config(g);
    const Policy policy = load_policy(policy_path);
    const std::vector<StateVec> states =
        states_path.empty() ? sample_initial_states(c, 5, c.experiment.seed) : load_states(states_path);
    std::ofstream out(g.out + "/trajectories.csv");
    const int n = c.solver.model.state_dim();
    const int m = c.solver.model.control_dim();
    out << "traj,t";
    for (int i = 0; i < n; ++i) out << ",x" << i;
    for (int i = 0; i < m; ++i) out << ",u" << i;
    out << "\n";
    IvpSettings ivp = c.sampling.ivp;
    if (!c.sampling.horizon_explicit) ivp.horizon = 2.0;
    char buf[64];
    for (std::size_t s = 0; s < states.size(); ++s) {
      const IvpTrajectory tr = simulate_ivp(c.solver.model, c.solver.cost, policy, states[s], ivp);
      for (std::size_t k = 0; k < tr.controls.size(); ++k) {
        out << s;
        std::snprintf(buf, sizeof buf, ",%.6g", tr.times[k]);
        out << buf;
        for (int i = 0; i < n; ++i) {
          std::snprintf(buf, sizeof buf, ",%.10g", tr.states[k][i]);
          out << buf;
        }
        for (int i = 0; i < m; ++i) {
          std::snprintf(buf, sizeof buf, ",%.10g", tr.controls[k][i]);
          out << buf;
        }
        out << "\n";
      }
    }
    std::cout << "wrote " << g.out << "/trajectories.csv (" << states.size() << " rollouts)\n";
  }
  return 0;
}

int cmd_oracle(const Globals& g) {
  const RunConfig c = resolve_config(g);
  const OracleReport report = oracle_suite(c);
  ensure_directory(g.out);
  save_json(g.out + "/oracle_report.json", report.to_json());
  for (const auto& r : report.results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  measured " << r.measured
              << "  tolerance " << r.tolerance << "  " << r.detail << "\n";
  }
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free terminal time optimal control: data generation, adaptive sampling and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  std::uint64_t seed = 0;
  int workers = 1;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  auto* workers_opt =
      app.add_option("--workers", workers, "Worker threads (FTOC_WORKERS also accepted)")
          ->check(CLI::PositiveNumber);

  int count = 0;
  std::string name = "dataset";
  auto* gen = app.add_subcommand("gen-data", "Solve sampled initial states and write a dataset");
  gen->add_option("--count", count, "Number of initial states (default: experiment.n_train)");
  gen->add_option("--name", name, "File stem")->capture_default_str();

  std::string data_path, val_path, arch_name;
  auto* train = app.add_subcommand("train", "Fit a policy to a dataset");
  train->add_option("--data", data_path, "Training dataset (NDJSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--val", val_path, "Validation dataset (NDJSON)")->check(CLI::ExistingFile);
  train->add_option("--arch", arch_name, "mlp or qrnet (default: from config)");

  auto* ivp_art = app.add_subcommand("ivp-art", "Adaptive sampling with automatic resampling times");
  ivp_art->add_option("--arch", arch_name, "mlp or qrnet (default: from config)");
  auto* dagger = app.add_subcommand("dagger", "Adaptive sampling at fixed trajectory fractions");
  dagger->add_option("--arch", arch_name, "mlp or qrnet (default: from config)");

  std::vector<std::string> policy_paths;
  std::string states_path;
  auto* eval = app.add_subcommand("eval", "Closed-loop evaluation of a policy or an ensemble");
  eval->add_option("--policy", policy_paths, "Checkpoint(s); several form an ensemble")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--states", states_path, "Initial states (NDJSON); default: sampled test set")
      ->check(CLI::ExistingFile);

  std::vector<std::string> metrics_paths;
  std::string plot_policy;
  auto* plot = app.add_subcommand("plot", "Emit plot data: seed summaries and rollouts");
  plot->add_option("--metrics", metrics_paths, "Metrics CSV file(s)")->check(CLI::ExistingFile);
  plot->add_option("--policy", plot_policy, "Checkpoint to roll out")->check(CLI::ExistingFile);
  plot->add_option("--states", states_path, "Initial states (NDJSON)")->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle", "Run the cross-check suite");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;
  if (*workers_opt) g.workers = workers;

  try {
    if (*gen) return cmd_gen_data(g, count, name);
    if (*train) return cmd_train(g, data_path, val_path, arch_name);
    if (*ivp_art) return cmd_adaptive(g, Strategy::kIvpArt, arch_name);
    if (*dagger) return cmd_adaptive(g, Strategy::kDagger, arch_name);
    if (*eval) return cmd_eval(g, policy_paths, states_path);
    if (*plot) return cmd_plot(g, metrics_paths, plot_policy, states_path);
    if (*oracle) return cmd_oracle(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
