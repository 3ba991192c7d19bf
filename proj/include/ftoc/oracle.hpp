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

// Brute-force and closed-form cross-checks of the solver stack.

#ifndef FTOC_ORACLE_HPP_
#define FTOC_ORACLE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ftoc/config.hpp"

namespace ftoc {

/// Exact discrete LQ solution for the double integrator under the RK4
/// discretization (which is exact for it), with the solver's rectangle-rule
/// running cost.
struct DoubleIntegratorLq {
  std::vector<double> controls;
  std::vector<StateVec> states;
  double cost = 0.0;  // including r_t * t_f and the terminal penalty
};

DoubleIntegratorLq solve_double_integrator_lq(const CostSpec& cost, const StateVec& x0, double t_f,
                                              int n_steps);

struct OracleResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct OracleReport {
  std::vector<OracleResult> results;
  bool all_passed() const;
  nlohmann::json to_json() const;
};

/// Max |u(x_f) - u_f| over `draws` random QRnet parameter sets.
double qrnet_terminal_error(const RunConfig& config, int draws, std::uint64_t seed);

/// Max relative mismatch between the analytic training-loss gradient and a
/// central difference (h = 1e-5) over every parameter, on `records` random
/// records. Covers the time network too for QRnet.
double training_gradient_error(const RunConfig& config, Architecture arch, int records,
                               std::uint64_t seed);

OracleResult oracle_riccati_vs_ddp(const DdpSettings& ddp);
OracleResult oracle_free_time_grid(const DdpSettings& ddp);
OracleResult oracle_terminal_time_gradient(const DdpSettings& ddp);
OracleResult oracle_training_gradient(const RunConfig& config);
OracleResult oracle_qrnet_terminal(const RunConfig& config);
OracleResult oracle_energy_drift(const ModelSpec& model);
OracleResult oracle_riccati_table(const RunConfig& config);

/// Runs every oracle once, using the DDP settings of `config`.
OracleReport oracle_suite(const RunConfig& config);

}  // namespace ftoc

#endif  // FTOC_ORACLE_HPP_
