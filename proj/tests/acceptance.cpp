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


// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ftoc/config.hpp"
#include "ftoc/harness.hpp"
#include "ftoc/io.hpp"
#include "ftoc/oracle.hpp"

namespace ftoc {
namespace {

using nlohmann::json;

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict from_oracle(const OracleResult& r) {
  return {r.passed, r.name + " measured " + fmt("%.3g", r.measured) + " (tol " +
                        fmt("%.3g", r.tolerance) + "); " + r.detail};
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

class Runner {
 public:
  Runner(std::string out, std::string benchmark, int workers)
      : out_(std::move(out)), benchmark_(std::move(benchmark)), workers_(workers) {}

  void run(int id, const std::string& name, double limit_s, const std::function<Verdict()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = body();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_s > 0.0 && secs >= limit_s) {
      v.passed = false;
      v.detail += "; over the " + fmt("%.0f", limit_s) + " s budget";
    }
    std::printf("%s criterion %d %s: %s [%.1f s]\n", v.passed ? "PASS" : "FAIL", id, name.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
    summary_.push_back({{"criterion", id},
                        {"name", name},
                        {"passed", v.passed},
                        {"detail", v.detail},
                        {"seconds", secs}});
    all_passed_ = all_passed_ && v.passed;
  }

  RunConfig benchmark_config() const {
    RunConfig c = load_config(benchmark_);
    c.workers = workers_;
    return c;
  }

  const std::string& out() const { return out_; }
  int workers() const { return workers_; }
  bool all_passed() const { return all_passed_; }
  const json& summary() const { return summary_; }

  // Benchmark runs shared between criteria.
  std::optional<BenchmarkResult> qrnet_first;
  std::string qrnet_first_csv;

 private:
  std::string out_, benchmark_;
  int workers_;
  bool all_passed_ = true;
  json summary_ = json::array();
};

Verdict marching_benefit(const Runner& runner) {
  RunConfig c = default_config();
  c.workers = runner.workers();
  const std::vector<StateVec> states = sample_initial_states(c, 50, 3);
  const GeneratedData marched = generate_dataset(c.solver, states, c.workers);
  SolverConfig single = c.solver;
  single.schedule = {c.solver.schedule.back()};
  const GeneratedData flat = generate_dataset(single, states, c.workers);
  std::ostringstream d;
  d << "marching " << marched.converged << "/50, single level " << flat.converged << "/50";
  return {marched.converged >= flat.converged && marched.converged >= 45, d.str()};
}

Verdict end_to_end(Runner& runner) {
  const RunConfig c = runner.benchmark_config();
  const std::string dir = runner.out() + "/benchmark_run1";
  runner.qrnet_first = run_benchmark(c, c.experiment.seeds, {Strategy::kIvpArt, Strategy::kDagger},
                                     Architecture::kQrnet, dir);
  runner.qrnet_first_csv = read_file(dir + "/metrics.csv");
  const BenchmarkResult& b = *runner.qrnet_first;

  std::vector<double> success, ratio;
  bool beats_dagger = true;
  int steps = 0, non_decreasing = 0;
  std::ostringstream per_seed;
  for (std::size_t s = 0; s < b.seeds.size(); ++s) {
    const StrategyOutcome& ivp = b.outcomes[s][0];
    const StrategyOutcome& dag = b.outcomes[s][1];
    success.push_back(ivp.ensemble.success_rate);
    ratio.push_back(ivp.ensemble.mean_ratio);
    beats_dagger = beats_dagger && ivp.ensemble.mean_ratio <= dag.ensemble.mean_ratio;
    for (std::size_t k = 1; k < ivp.iterations.size(); ++k) {
      ++steps;
      if (ivp.iterations[k].success_rate >= ivp.iterations[k - 1].success_rate) ++non_decreasing;
    }
    per_seed << " seed " << b.seeds[s] << ": ivp-art " << fmt("%.2f", ivp.ensemble.success_rate)
             << "/" << fmt("%.3f", ivp.ensemble.mean_ratio) << " dagger "
             << fmt("%.2f", dag.ensemble.success_rate) << "/" << fmt("%.3f", dag.ensemble.mean_ratio)
             << ";";
  }
  const bool a = mean(success) >= 0.90 && mean(ratio) <= 1.5;
  const bool c7 = non_decreasing >= 4;
  std::ostringstream d;
  d << "(a) success " << fmt("%.3f", mean(success)) << " >= 0.90, ratio " << fmt("%.3f", mean(ratio))
    << " <= 1.5: " << (a ? "ok" : "no") << "; (b) ivp-art ratio <= dagger on every seed: "
    << (beats_dagger ? "ok" : "no") << "; (c) non-decreasing steps " << non_decreasing << "/"
    << steps << " >= 4: " << (c7 ? "ok" : "no") << ";" << per_seed.str();
  return {a && beats_dagger && c7, d.str()};
}

Verdict mlp_vs_qrnet(Runner& runner) {
  if (!runner.qrnet_first) return {false, "needs the end-to-end benchmark run"};
  const RunConfig c = runner.benchmark_config();
  const BenchmarkResult mlp = run_benchmark(c, c.experiment.seeds, {Strategy::kIvpArt},
                                            Architecture::kMlp, runner.out() + "/benchmark_mlp");
  std::vector<double> q, m;
  for (std::size_t s = 0; s < mlp.seeds.size(); ++s) {
    m.push_back(mlp.outcomes[s][0].ensemble.success_rate);
    q.push_back(runner.qrnet_first->outcomes[s][0].ensemble.success_rate);
  }
  return {mean(m) <= mean(q) - 0.3, "mlp ensemble success " + fmt("%.3f", mean(m)) +
                                        ", qrnet " + fmt("%.3f", mean(q)) + ", margin 0.3"};
}

Verdict determinism(Runner& runner) {
  if (!runner.qrnet_first) return {false, "needs the end-to-end benchmark run"};
  const RunConfig c = runner.benchmark_config();
  const std::string dir = runner.out() + "/benchmark_run2";
  run_benchmark(c, c.experiment.seeds, {Strategy::kIvpArt, Strategy::kDagger},
                Architecture::kQrnet, dir);
  const std::string second = read_file(dir + "/metrics.csv");
  const bool same = !second.empty() && second == runner.qrnet_first_csv;
  return {same, std::string("metrics.csv ") + (same ? "identical" : "differs") + " (" +
                    std::to_string(second.size()) + " bytes)"};
}

Verdict integrator_order() {
  const ModelSpec model = ModelSpec::planar_arm(2);
  const CostSpec cost = make_cost(model, DofVec::Constant(2, 0.5), 100, 0.025, 0.005, 2.5e5);
  StateVec x0(4);
  x0 << 0.2, 0.9, 0.3, -0.2;
  // Gravity compensation plus a gentle torque: a slow, smooth swing.
  const ControlLaw law = [&model](double t, const StateVec& x) {
    DofVec u = gravity_terms(model, x.head(2));
    u[0] += 2.0 * std::sin(2.0 * t);
    u[1] -= 1.0;
    return ControlVec(u);
  };
  auto end_state = [&](double dt) {
    IvpSettings s;
    s.dt_sim = dt;
    s.horizon = 1.0;
    s.stop_at_hit = false;
    return simulate_ivp(model, cost, law, x0, s).states.back();
  };
  const StateVec ref = end_state(1e-4);
  const double e1 = (end_state(0.02) - ref).norm();
  const double e2 = (end_state(0.01) - ref).norm();
  return {e1 / e2 >= 8.0, "error " + fmt("%.3g", e1) + " at dt 0.02, " + fmt("%.3g", e2) +
                              " at dt 0.01, ratio " + fmt("%.2f", e1 / e2)};
}

int run(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out = "acceptance_out";
  std::string benchmark = std::string(FTOC_SOURCE_DIR) + "/configs/benchmark.json";
  int workers = 0;
  app.add_option("--out", out, "output directory");
  app.add_option("--benchmark", benchmark, "benchmark config");
  app.add_option("--workers", workers, "worker threads (0: FTOC_WORKERS or all cores)");
  CLI11_PARSE(app, argc, argv);
  if (workers <= 0) {
    const char* env = std::getenv("FTOC_WORKERS");
    workers = env ? std::max(1, std::atoi(env))
                  : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  }
  ensure_directory(out);

  Runner r(out, benchmark, workers);
  const RunConfig base = default_config();
  r.run(1, "ddp-vs-riccati", 1.0, [&] { return from_oracle(oracle_riccati_vs_ddp(base.solver.ddp)); });
  r.run(2, "free-time-vs-grid", 300.0,
        [&] { return from_oracle(oracle_free_time_grid(base.solver.ddp)); });
  r.run(3, "marching-benefit", 1800.0, [&] { return marching_benefit(r); });
  r.run(4, "qrnet-terminal-identity", 0.0, [&] { return from_oracle(oracle_qrnet_terminal(base)); });
  r.run(5, "training-gradient", 0.0, [&] {
    const double q = training_gradient_error(base, Architecture::kQrnet, 10, 5);
    const double m = training_gradient_error(base, Architecture::kMlp, 10, 5);
    return Verdict{q <= 1e-3 && m <= 1e-3, "relative error qrnet " + fmt("%.3g", q) + ", mlp " +
                                               fmt("%.3g", m) + " (tol 1e-3)"};
  });
  r.run(6, "riccati-table", 0.0, [&] {
    Verdict v = from_oracle(oracle_riccati_table(base));
    const long entries = std::lround(base.lqr.horizon / base.lqr.step);
    v.detail += "; " + std::to_string(entries) + " recursion steps";
    return v;
  });
  r.run(7, "end-to-end-benchmark", 3600.0, [&] { return end_to_end(r); });
  r.run(8, "mlp-vs-qrnet", 0.0, [&] { return mlp_vs_qrnet(r); });
  r.run(9, "determinism", 0.0, [&] { return determinism(r); });
  r.run(10, "integrator-order", 0.0, [] { return integrator_order(); });

  save_json(out + "/acceptance.json",
            json{{"passed", r.all_passed()}, {"workers", workers}, {"criteria", r.summary()}});
  std::printf("%s\n", r.all_passed() ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED");
  return r.all_passed() ? 0 : 1;
}

}  // namespace
}  // namespace ftoc

int main(int argc, char** argv) {
  try {
    return ftoc::run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
}
