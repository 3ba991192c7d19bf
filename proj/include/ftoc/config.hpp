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

// Run configuration. Every section is optional in the JSON file; missing
// fields keep their defaults and unknown fields are rejected.

#ifndef FTOC_CONFIG_HPP_
#define FTOC_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ftoc/sampling.hpp"

namespace ftoc {

struct LqrConfig {
  double horizon = 0.8;  // T
  double step = 5e-4;    // table grid, usually the unified dt
  BlendSchedule blend;
  double u_min = -2000.0;
  double u_max = 2000.0;
};

struct SamplingConfig {
  double tau = 1.0;
  int iterations = 6;
  DatasetMode mode = DatasetMode::kUnion;
  std::vector<double> fractions{0.25, 0.75};
  IvpSettings ivp;
  // Evaluation/sampling horizon as a multiple of the largest training t_f*;
  // used when ivp.horizon is not set explicitly.
  double horizon_factor = 1.5;
  bool horizon_explicit = false;
};

struct ExperimentConfig {
  std::vector<double> q_c{-0.5, 1.5};
  double side = 1.0;
  int n_train = 100;
  int n_val = 30;
  int n_test = 100;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  Architecture architecture = Architecture::kQrnet;
  double ratio_cap_fail = 10.0;
  double ratio_cap_success = 5.0;
};

struct RunConfig {
  SolverConfig solver;  // model, cost, ddp, freetime, schedule
  std::vector<double> q_f{0.5, 0.5};
  LqrConfig lqr;
  TrainConfig training;
  SamplingConfig sampling;
  ExperimentConfig experiment;
  int workers = 1;

  /// Rebuilds derived fields (cost.x_f, cost.u_f) and checks consistency.
  void finalize();
  void validate() const;
};

/// Paper defaults for the 2-link arm.
RunConfig default_config();

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

}  // namespace ftoc

#endif  // FTOC_CONFIG_HPP_
