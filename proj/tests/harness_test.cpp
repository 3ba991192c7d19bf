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


#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ftoc/harness.hpp"
#include "ftoc/io.hpp"
#include "ftoc/oracle.hpp"
#include "test_util.hpp"

namespace ftoc {
namespace {

using testing::state;

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ftoc_harness_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(SampleInitialStates, BoxAroundCenterAtRest) {
  const RunConfig c = default_config();
  const auto xs = sample_initial_states(c, 500, 9);
  ASSERT_EQ(xs.size(), 500u);
  for (const StateVec& x : xs) {
    EXPECT_LE(std::abs(x[0] - c.experiment.q_c[0]), 0.5 * c.experiment.side);
    EXPECT_LE(std::abs(x[1] - c.experiment.q_c[1]), 0.5 * c.experiment.side);
    EXPECT_EQ(x[2], 0.0);
    EXPECT_EQ(x[3], 0.0);
  }
  EXPECT_EQ(sample_initial_states(c, 5, 9)[4], xs[4]);
  EXPECT_NE(sample_initial_states(c, 5, 10)[0], xs[0]);
  EXPECT_THROW(sample_initial_states(c, 0, 9), ContractError);
}

TEST(CostRatioCdf, Examples) {
  const auto cdf = cost_ratio_cdf({10.0, 2.0, 1.0, 2.0});
  ASSERT_EQ(cdf.size(), 3u);
  EXPECT_EQ(cdf[0], std::make_pair(1.0, 0.25));
  EXPECT_EQ(cdf[1], std::make_pair(2.0, 0.75));
  EXPECT_EQ(cdf[2], std::make_pair(10.0, 1.0));
  const auto flat = cost_ratio_cdf({1.0, 1.0, 1.0});
  ASSERT_EQ(flat.size(), 1u);
  EXPECT_EQ(flat[0], std::make_pair(1.0, 1.0));
  std::ostringstream out;
  write_cdf_csv(out, cdf);
  EXPECT_NE(out.str().find("1,0.25"), std::string::npos);
}

class Evaluation : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new RunConfig(default_config());
    states_ = new std::vector<StateVec>(sample_initial_states(*config_, 4, 21));
    data_ = new GeneratedData(generate_dataset(config_->solver, *states_, 1));
  }
  static void TearDownTestSuite() {
    delete config_;
    delete states_;
    delete data_;
  }
  static std::vector<double> optimal_costs() {
    std::vector<double> out;
    for (const Label& l : data_->labels) out.push_back(optimal_running_cost(config_->solver.cost, l.solution));
    return out;
  }
  static EvalSettings settings(double dt_sim) {
    EvalSettings e;
    e.ivp.dt_sim = dt_sim;
    e.ivp.horizon = 1.5 * data_->max_t_f;
    return e;
  }
  static RunConfig* config_;
  static std::vector<StateVec>* states_;
  static GeneratedData* data_;
};

RunConfig* Evaluation::config_ = nullptr;
std::vector<StateVec>* Evaluation::states_ = nullptr;
GeneratedData* Evaluation::data_ = nullptr;

TEST_F(Evaluation, GeneratedDataReport) {
  ASSERT_EQ(data_->converged, 4);
  EXPECT_EQ(data_->report["n_states"], 4);
  EXPECT_EQ(data_->report["n_records"], data_->data.size());
  EXPECT_EQ(data_->report["failures"].size(), 0u);
  EXPECT_EQ(data_->roots.size(), 4u);
}

// Open-loop replay only reaches the 1e-3 ball when the simulator steps on
// the solver grid; coarser steps alias the fast final braking torques.
TEST_F(Evaluation, ReplayingOptimalControlsIsNearOptimal) {
  const Metrics m = evaluate_controller(
      config_->solver.model, config_->solver.cost,
      [&](std::size_t i) { return replay_law(data_->labels[i].solution, config_->solver.cost.u_f); },
      *states_, optimal_costs(), settings(config_->solver.freetime.dt));
  EXPECT_EQ(m.success_rate, 1.0);
  for (double r : m.ratios) {
    EXPECT_GE(r, 1.0 - 1e-3);
    EXPECT_LE(r, 1.05);
  }
}

TEST_F(Evaluation, ZeroTorqueFailsEverywhere) {
  const ControlLaw zero = [](double, const StateVec&) { return ControlVec::Zero(2).eval(); };
  const Metrics m = evaluate_controller(config_->solver.model, config_->solver.cost,
                                        [&](std::size_t) { return zero; }, *states_,
                                        optimal_costs(), settings(0.002));
  EXPECT_EQ(m.success_rate, 0.0);
  EXPECT_EQ(m.n_fail, 4);
  EXPECT_EQ(m.mean_ratio, 10.0);
  EXPECT_EQ(m.std_ratio, 0.0);
}

TEST_F(Evaluation, InvariantToStateOrder) {
  const std::vector<double> costs = optimal_costs();
  std::vector<std::size_t> order = {2, 0, 3, 1};
  std::vector<StateVec> permuted;
  std::vector<double> permuted_costs;
  for (std::size_t i : order) {
    permuted.push_back((*states_)[i]);
    permuted_costs.push_back(costs[i]);
  }
  auto law = [&](const std::vector<std::size_t>& idx) {
    return [&, idx](std::size_t i) {
      return replay_law(data_->labels[idx[i]].solution, config_->solver.cost.u_f);
    };
  };
  const Metrics a = evaluate_controller(config_->solver.model, config_->solver.cost,
                                        law({0, 1, 2, 3}), *states_, costs, settings(0.002));
  const Metrics b = evaluate_controller(config_->solver.model, config_->solver.cost, law(order),
                                        permuted, permuted_costs, settings(0.002));
  EXPECT_EQ(a.success_rate, b.success_rate);
  EXPECT_NEAR(a.mean_ratio, b.mean_ratio, 1e-12);
  EXPECT_NEAR(a.std_ratio, b.std_ratio, 1e-12);
}

TEST_F(Evaluation, RejectsMissingCosts) {
  EXPECT_THROW(evaluate_controller(config_->solver.model, config_->solver.cost,
                                   [&](std::size_t) { return ControlLaw{}; }, *states_, {1.0},
                                   settings(0.002)),
               ContractError);
}

TEST(DatasetIo, RoundTrip) {
  Dataset d;
  for (int k = 0; k < 3; ++k) {
    Record r;
    r.x = state({0.1 * k, -0.2, 1.0 / 3.0, 2.5e-7});
    r.u = testing::control({12.75, -3.0 * k});
    r.t_remaining = 0.6 - 0.01 * k;
    r.traj_id = 42;
    r.knot = k;
    r.iteration = 2;
    r.root = 5;
    r.root_time = 0.125;
    d.add(r);
  }
  std::stringstream ss;
  write_dataset(ss, d);
  const Dataset back = read_dataset(ss);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Record& a = d.records()[i];
    const Record& b = back.records()[i];
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.t_remaining, b.t_remaining);
    EXPECT_EQ(a.traj_id, b.traj_id);
    EXPECT_EQ(a.knot, b.knot);
    EXPECT_EQ(a.iteration, b.iteration);
    EXPECT_EQ(a.root, b.root);
    EXPECT_EQ(a.root_time, b.root_time);
  }
}

TEST(StatesIo, RoundTrip) {
  const fs::path dir = scratch_dir("states");
  const std::vector<StateVec> xs = {state({0.1, 0.2, 0.0, 0.0}), state({-1.0 / 7.0, 3.0, 0.0, 0.0})};
  save_states((dir / "s.ndjson").string(), xs);
  EXPECT_EQ(load_states((dir / "s.ndjson").string()), xs);
}

TEST(PolicyIo, CheckpointReproducesControls) {
  const RunConfig c = default_config();
  Dataset d;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 64; ++k) {
    Record r;
    r.x = c.solver.cost.x_f;
    for (int i = 0; i < 4; ++i) r.x[i] += 0.5 * (uniform01(rng) - 0.5);
    r.u = c.solver.cost.u_f - 10.0 * (r.x.head(2) - c.solver.cost.x_f.head(2));
    r.t_remaining = 0.3 + 0.1 * uniform01(rng);
    r.traj_id = k;
    d.add(r);
  }
  TrainConfig t;
  t.epochs = 5;
  t.batch_size = 32;
  t.validate_every = 5;
  for (Architecture arch : {Architecture::kQrnet, Architecture::kMlp}) {
    const Policy p = fit_policy(arch, d, Dataset{}, t, c.solver.cost.x_f, c.solver.cost.u_f,
                                make_surrogate(c));
    const fs::path dir = scratch_dir("policy");
    save_policy((dir / "p.json").string(), p);
    const Policy q = load_policy((dir / "p.json").string());
    EXPECT_EQ(q.architecture(), arch);
    for (const Record& r : d.records()) {
      ASSERT_EQ(p.control(r.x), q.control(r.x));
    }
    if (arch == Architecture::kQrnet) EXPECT_EQ(p.terminal_time(d.records()[0].x), q.terminal_time(d.records()[0].x));
  }
}

TEST(ConfigIo, RoundTripAndUnknownKeys) {
  RunConfig c = default_config();
  c.sampling.tau = 0.37;
  c.experiment.seeds = {4, 5};
  c.training.epochs = 17;
  const RunConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  nlohmann::json j = config_to_json(c);
  j["sampling"]["tua"] = 0.5;
  EXPECT_THROW(config_from_json(j), DomainError);
  nlohmann::json top = config_to_json(c);
  top["extra"] = 1;
  EXPECT_THROW(config_from_json(top), DomainError);
}

TEST(ConfigIo, ShippedConfigsLoad) {
  const fs::path root = fs::path(FTOC_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    ++seen;
  }
  EXPECT_GT(seen, 0);
}

TEST(MetricsCsv, HeaderAndRoundTrip) {
  std::vector<MetricsRow> rows = {{"0", "ivp-art", 1, 0.5, 1.25, 0.125, 3, 1},
                                  {"ensemble", "dagger", 2, 1.0, 1.0625, 0.0, 0, 0}};
  std::ostringstream out;
  write_metrics_csv(out, rows);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "iteration,strategy,seed,success_rate,mean_ratio,std_ratio,n_fail,n_diverged");
  const fs::path dir = scratch_dir("metrics");
  save_metrics_csv((dir / "m.csv").string(), rows);
  const auto back = load_metrics_csv((dir / "m.csv").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].iteration, "ensemble");
  EXPECT_EQ(back[1].strategy, "dagger");
  EXPECT_EQ(back[0].mean_ratio, 1.25);
  EXPECT_EQ(back[0].n_fail, 3);
  EXPECT_EQ(back[0].n_diverged, 1);
}

TEST(OracleSuite, AllPassAndFaultIsCaught) {
  RunConfig c = default_config();
  const OracleReport ok = oracle_suite(c);
  std::set<std::string> names;
  for (const auto& r : ok.results) {
    EXPECT_TRUE(names.insert(r.name).second) << "duplicate oracle " << r.name;
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  }
  EXPECT_EQ(names.size(), 7u);
  EXPECT_TRUE(ok.all_passed());
  EXPECT_EQ(ok.to_json()["oracles"].size(), 7u);

  c.solver.ddp.fault_line_search = true;
  const OracleReport bad = oracle_suite(c);
  EXPECT_FALSE(bad.all_passed());
}

}  // namespace
}  // namespace ftoc
