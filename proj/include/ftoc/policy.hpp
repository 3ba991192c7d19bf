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

// Learned feedback policies. A QRnet policy evaluates
//
//   u(x) = sigma(u_lqr(x, tf_hat(x)) + N(x) - N(x_f))
//
// where N is the control network and tf_hat the terminal-time network, so
// u(x_f) == u_f for any weights. A plain MLP policy is just N(x).

#ifndef FTOC_POLICY_HPP_
#define FTOC_POLICY_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftoc/lqr.hpp"
#include "ftoc/mlp.hpp"
#include "ftoc/types.hpp"

namespace ftoc {

enum class Architecture { kMlp, kQrnet };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& name);

/// One supervised sample: state, optimal control, optimal remaining time.
struct Record {
  StateVec x;
  ControlVec u;
  double t_remaining = 0.0;
  long traj_id = 0;
  int knot = 0;
  int iteration = 0;
  // Lineage used by replacement-mode datasets: index of the initial state
  // this trajectory descends from, and its start time on that timeline.
  int root = -1;
  double root_time = 0.0;
};

class Dataset {
 public:
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Adds a record unless (traj_id, knot) is already present.
  bool add(const Record& r);
  void merge(const Dataset& other);
  /// Drops every record for which `pred` is true.
  template <typename Pred>
  void remove_if(Pred pred) {
    std::vector<Record> kept;
    kept.reserve(records_.size());
    for (auto& r : records_) {
      if (!pred(r)) kept.push_back(r);
    }
    records_ = std::move(kept);
    rebuild_index();
  }
  bool contains(long traj_id, int knot) const;

 private:
  void rebuild_index();
  std::vector<Record> records_;
  std::set<std::pair<long, int>> keys_;
};

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  /// Per-coordinate mean and standard deviation of the columns of `samples`;
  /// scales below 1e-8 are replaced with 1.
  static Standardizer fit(const Eigen::MatrixXd& samples);
  static Standardizer identity(int dim);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd restore(const Eigen::VectorXd& z) const;
};

struct TrainConfig {
  AdamConfig adam;
  int batch_size = 1024;
  int epochs = 200;
  int validate_every = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Terminal-equilibrium surrogate shared by QRnet policies. The table is
/// immutable once built and shared between policies.
struct LqrSurrogate {
  std::shared_ptr<const RiccatiTable> table;
  BlendSchedule blend;
  Saturation saturation;
};

class Policy {
 public:
  Policy() = default;
  /// Untrained policy with zero weights and identity standardization.
  Policy(Architecture arch, int state_dim, int control_dim, const StateVec& x_f,
         const ControlVec& u_f, std::optional<LqrSurrogate> surrogate);

  Architecture architecture() const { return arch_; }
  int state_dim() const { return state_dim_; }
  int control_dim() const { return control_dim_; }

  /// Closed-loop control. `tf_override` replaces the terminal-time network.
  ControlVec control(const StateVec& x, std::optional<double> tf_override = std::nullopt) const;
  /// Predicted optimal remaining time (QRnet only).
  double terminal_time(const StateVec& x) const;
  /// Scaled control-network output N(x).
  ControlVec network_output(const StateVec& x) const;

  /// Recomputes the cached N(x_f). Call after every parameter change.
  void refresh_cache();
  const ControlVec& network_at_terminal() const { return nn_at_xf_; }

  MlpParams& control_mlp() { return control_mlp_; }
  const MlpParams& control_mlp() const { return control_mlp_; }
  MlpParams& time_mlp() { return time_mlp_; }
  const MlpParams& time_mlp() const { return time_mlp_; }
  Standardizer& input_standardizer() { return input_; }
  const Standardizer& input_standardizer() const { return input_; }
  Eigen::VectorXd& output_shift() { return out_shift_; }
  const Eigen::VectorXd& output_shift() const { return out_shift_; }
  Eigen::VectorXd& output_scale() { return out_scale_; }
  const Eigen::VectorXd& output_scale() const { return out_scale_; }
  /// Time network output is multiplied by this (mean training time).
  double& time_scale() { return time_scale_; }
  double time_scale() const { return time_scale_; }
  const std::optional<LqrSurrogate>& surrogate() const { return surrogate_; }
  const StateVec& x_f() const { return x_f_; }
  const ControlVec& u_f() const { return u_f_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

 private:
  Architecture arch_ = Architecture::kQrnet;
  int state_dim_ = 0;
  int control_dim_ = 0;
  StateVec x_f_;
  ControlVec u_f_;
  MlpParams control_mlp_;
  MlpParams time_mlp_;
  Standardizer input_;
  Eigen::VectorXd out_shift_;
  Eigen::VectorXd out_scale_;
  double time_scale_ = 1.0;
  std::optional<LqrSurrogate> surrogate_;
  ControlVec nn_at_xf_;
  std::uint64_t seed_ = 0;
};

/// Mean of member controls; every member evaluates its own time network.
class Ensemble {
 public:
  explicit Ensemble(std::vector<Policy> members);
  ControlVec control(const StateVec& x) const;
  const std::vector<Policy>& members() const { return members_; }

 private:
  std::vector<Policy> members_;
};

ControlVec ensemble_forward(const std::vector<Policy>& policies, const StateVec& x);

/// Training diverged (non-finite loss).
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

struct ValidationPoint {
  int epoch = 0;  // epochs completed when the check ran
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::vector<ValidationPoint> checks;
};

/// Mean squared control error (1/|D|) sum |u_hat(x_i) - u_i|^2. QRnet
/// policies use the record's remaining time in place of the time network.
/// If `grad` is given it receives the gradient w.r.t. the control network,
/// including the N(x_f) term.
double control_loss(const Policy& policy, const Dataset& data, MlpGradient* grad = nullptr);

/// Mean squared terminal-time error of the time network.
double time_loss(const Policy& policy, const Dataset& data, MlpGradient* grad = nullptr);

/// Fits the control network from a fresh seeded initialization and keeps the
/// parameters with the best validation loss (training loss if `val` is
/// empty).
TrainReport train_control(Policy& policy, const Dataset& train, const Dataset& val,
                          const TrainConfig& config);

TrainReport train_timenet(Policy& policy, const Dataset& train, const Dataset& val,
                          const TrainConfig& config);

/// Builds and trains a policy: control network, plus the time network for
/// QRnet.
Policy fit_policy(Architecture arch, const Dataset& train, const Dataset& val,
                  const TrainConfig& config, const StateVec& x_f, const ControlVec& u_f,
                  const std::optional<LqrSurrogate>& surrogate, TrainReport* control_report = nullptr,
                  TrainReport* time_report = nullptr);

}  // namespace ftoc

#endif  // FTOC_POLICY_HPP_
