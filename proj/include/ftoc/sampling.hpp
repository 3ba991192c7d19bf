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

// Closed-loop simulation and the adaptive data loops: IVP enhanced sampling
// with automatic resampling times, and a DAgger-style baseline that samples
// at fixed fractions of each trajectory's optimal horizon.

#ifndef FTOC_SAMPLING_HPP_
#define FTOC_SAMPLING_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftoc/freetime.hpp"
#include "ftoc/policy.hpp"

namespace ftoc {

/// Everything needed to label a state with an open-loop solve.
struct SolverConfig {
  ModelSpec model;
  CostSpec cost;
  DdpSettings ddp;
  FreeTimeSettings freetime;
  std::vector<int> schedule;

  void validate() const;
};

struct Label {
  StateVec x0;
  FreeTimeSolution solution;
  bool converged = false;
  std::string failure;  // empty when converged
};

/// Free-time solve from x0; solver errors are caught and reported.
Label solve_label(const SolverConfig& config, const StateVec& x0,
                  const std::optional<FreeTimeStart>& start = std::nullopt);

/// Appends one record per control knot of a labeled trajectory. Knot j gets
/// remaining time t_f - j dt.
void append_records(Dataset& data, const FreeTimeSolution& sol, long traj_id, int iteration,
                    int root, double root_time);

struct IvpSettings {
  double dt_sim = 1e-3;
  double horizon = 2.0;
  double eps_succ = 1e-3;
  bool stop_at_hit = true;

  void validate() const;
};

struct IvpTrajectory {
  std::vector<double> times;
  std::vector<StateVec> states;
  std::vector<ControlVec> controls;  // control at each knot
  std::optional<double> first_hit;
  std::optional<double> realized_cost;  // running cost up to first_hit
  bool diverged = false;
};

using ControlLaw = std::function<ControlVec(double t, const StateVec& x)>;

/// RK4 closed-loop rollout with the control re-evaluated at every stage.
IvpTrajectory simulate_ivp(const ModelSpec& model, const CostSpec& cost, const ControlLaw& law,
                           const StateVec& x0, const IvpSettings& settings);

IvpTrajectory simulate_ivp(const ModelSpec& model, const CostSpec& cost, const Policy& policy,
                           const StateVec& x0, const IvpSettings& settings);

/// Optimal state at time t: linear interpolation of the knots on [0, t_f*],
/// x_f afterwards.
StateVec optimal_state_at(const DiscreteTrajectory& opt, const StateVec& x_f, double t);

struct ResamplePoint {
  int knot = 0;
  double t = 0.0;
  StateVec x;
};

/// Earliest simulation knot whose state is farther than tau from the optimal
/// trajectory.
std::optional<ResamplePoint> find_resample_state(const IvpTrajectory& ivp,
                                                 const DiscreteTrajectory& opt,
                                                 const StateVec& x_f, double tau);

/// Knots of `ivp` at the given fractions of t_f (rounded to the nearest
/// knot); fractions beyond the simulated span are skipped.
std::vector<ResamplePoint> fractional_states(const IvpTrajectory& ivp, double t_f,
                                             const std::vector<double>& fractions);

enum class Strategy { kIvpArt, kDagger };
enum class DatasetMode { kUnion, kReplacement };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);
std::string to_string(DatasetMode m);
DatasetMode dataset_mode_from_string(const std::string& name);

/// A member of X^0 together with its optimal solution.
struct Root {
  StateVec x0;
  DiscreteTrajectory optimal;
  double t_f = 0.0;
};

struct AdaptiveSettings {
  Strategy strategy = Strategy::kIvpArt;
  int iterations = 6;  // K
  double tau = 1.0;
  DatasetMode mode = DatasetMode::kUnion;
  std::vector<double> fractions{0.25, 0.75};  // DAgger grid
  IvpSettings ivp;
  Architecture architecture = Architecture::kQrnet;
  TrainConfig train;
  std::optional<LqrSurrogate> surrogate;
  int workers = 1;
  std::uint64_t seed = 0;
  /// Reused as u^0 instead of training on D^0 when set.
  std::shared_ptr<const Policy> initial_policy;

  void validate() const;
};

struct IterationState {
  int k = 0;
  std::vector<StateVec> samples;  // X^k
  Dataset new_records;            // labels gathered in this iteration
  const Dataset* dataset = nullptr;  // D^k
  const Policy* policy = nullptr;    // u^k
  int solves = 0;
  int failed_solves = 0;
};

/// No resample solve of an iteration converged.
class IterationError : public std::runtime_error {
 public:
  IterationError(const std::string& what, int k) : std::runtime_error(what), k_(k) {}
  int iteration() const { return k_; }

 private:
  int k_;
};

struct AdaptiveResult {
  std::vector<Policy> policies;  // u^0 .. u^K
  Dataset dataset;               // D^K
  std::vector<int> sample_counts;
  std::vector<int> failed_solves;

  /// Members u^1 .. u^K.
  std::vector<Policy> ensemble_members() const;
};

/// Seed of the training run for iteration k.
std::uint64_t iteration_seed(std::uint64_t seed, int k);

/// Runs the adaptive loop from the labeled roots. `initial` is D^0, `val` the
/// fixed validation set. `observer` is called after each iteration (k = 0
/// included).
AdaptiveResult run_adaptive(const SolverConfig& solver, const AdaptiveSettings& settings,
                            const std::vector<Root>& roots, const Dataset& initial,
                            const Dataset& val,
                            const std::function<void(const IterationState&)>& observer = {});

}  // namespace ftoc

#endif  // FTOC_SAMPLING_HPP_
