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

#include "ftoc/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ftoc {

std::string to_string(Architecture a) { return a == Architecture::kMlp ? "mlp" : "qrnet"; }

Architecture architecture_from_string(const std::string& name) {
  if (name == "mlp") return Architecture::kMlp;
  if (name == "qrnet") return Architecture::kQrnet;
  throw DomainError("unknown architecture: " + name);
}

// ---------------------------------------------------------------------------
// Dataset

bool Dataset::add(const Record& r) {
  if (!keys_.insert({r.traj_id, r.knot}).second) return false;
  records_.push_back(r);
  return true;
}

void Dataset::merge(const Dataset& other) {
  for (const auto& r : other.records()) add(r);
}

bool Dataset::contains(long traj_id, int knot) const { return keys_.count({traj_id, knot}) > 0; }

void Dataset::rebuild_index() {
  keys_.clear();
  for (const auto& r : records_) keys_.insert({r.traj_id, r.knot});
}

// ---------------------------------------------------------------------------
// Standardizer

Standardizer Standardizer::fit(const Eigen::MatrixXd& samples) {
  require(samples.cols() > 0, "cannot standardize an empty sample set");
  Standardizer s;
  s.mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - s.mean;
  s.scale = (centered.array().square().rowwise().sum() / static_cast<double>(samples.cols())).sqrt();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    if (!(s.scale[i] >= 1e-8)) s.scale[i] = 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  return ((x - mean).array() / scale.array()).matrix();
}

Eigen::VectorXd Standardizer::restore(const Eigen::VectorXd& z) const {
  return (z.array() * scale.array()).matrix() + mean;
}

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 0 || validate_every < 1 || !(adam.learning_rate > 0.0)) {
    throw ContractError("training config needs batch_size >= 1, epochs >= 0, validate_every >= 1");
  }
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(Architecture arch, int state_dim, int control_dim, const StateVec& x_f,
               const ControlVec& u_f, std::optional<LqrSurrogate> surrogate)
    : arch_(arch),
      state_dim_(state_dim),
      control_dim_(control_dim),
      x_f_(x_f),
      u_f_(u_f),
      control_mlp_(make_control_mlp(state_dim, control_dim)),
      input_(Standardizer::identity(state_dim)),
      out_shift_(Eigen::VectorXd::Zero(control_dim)),
      out_scale_(Eigen::VectorXd::Ones(control_dim)),
      surrogate_(std::move(surrogate)) {
  require(x_f_.size() == state_dim && u_f_.size() == control_dim, "policy equilibrium size mismatch");
  if (arch_ == Architecture::kQrnet) {
    require(surrogate_.has_value() && surrogate_->table, "QRnet policy needs an LQR surrogate");
    time_mlp_ = make_time_mlp(state_dim);
  }
  refresh_cache();
}

ControlVec Policy::network_output(const StateVec& x) const {
  const Eigen::VectorXd raw = mlp_forward(control_mlp_, input_.apply(x));
  return (out_shift_.array() + out_scale_.array() * raw.array()).matrix();
}

void Policy::refresh_cache() { nn_at_xf_ = network_output(x_f_); }

double Policy::terminal_time(const StateVec& x) const {
  require(arch_ == Architecture::kQrnet, "only QRnet policies carry a time network");
  return time_scale_ * mlp_forward(time_mlp_, input_.apply(x))[0];
}

ControlVec Policy::control(const StateVec& x, std::optional<double> tf_override) const {
  if (arch_ == Architecture::kMlp) return network_output(x);
  const double tf = tf_override ? *tf_override : terminal_time(x);
  const ControlVec base = u_lqr(*surrogate_->table, surrogate_->blend, x, std::max(tf, 0.0));
  const ControlVec pre = base + (network_output(x) - nn_at_xf_);
  return surrogate_->saturation.apply(pre);
}

Ensemble::Ensemble(std::vector<Policy> members) : members_(std::move(members)) {
  require(!members_.empty(), "ensemble needs at least one member");
}

ControlVec Ensemble::control(const StateVec& x) const { return ensemble_forward(members_, x); }

ControlVec ensemble_forward(const std::vector<Policy>& policies, const StateVec& x) {
  require(!policies.empty(), "ensemble needs at least one member");
  ControlVec sum = policies.front().control(x);
  for (std::size_t i = 1; i < policies.size(); ++i) sum += policies[i].control(x);
  return sum / static_cast<double>(policies.size());
}

// ---------------------------------------------------------------------------
// Losses

namespace {

// Column-per-record views of a dataset, prepared once per training run.
struct ControlData {
  Eigen::MatrixXd z;     // standardized states
  Eigen::MatrixXd base;  // u_lqr(x, t) for QRnet
  Eigen::MatrixXd u;     // targets
};

struct TimeData {
  Eigen::MatrixXd z;
  Eigen::RowVectorXd t;
};

ControlData prepare_control(const Policy& policy, const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  ControlData out{Eigen::MatrixXd(policy.state_dim(), n), Eigen::MatrixXd(), Eigen::MatrixXd(policy.control_dim(), n)};
  const bool qrnet = policy.architecture() == Architecture::kQrnet;
  if (qrnet) out.base.resize(policy.control_dim(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Record& r = data.records()[static_cast<std::size_t>(j)];
    out.z.col(j) = policy.input_standardizer().apply(r.x);
    out.u.col(j) = r.u;
    if (qrnet) {
      const auto& s = *policy.surrogate();
      out.base.col(j) = u_lqr(*s.table, s.blend, r.x, std::max(r.t_remaining, 0.0));
    }
  }
  return out;
}

TimeData prepare_time(const Policy& policy, const Dataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  TimeData out{Eigen::MatrixXd(policy.state_dim(), n), Eigen::RowVectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Record& r = data.records()[static_cast<std::size_t>(j)];
    out.z.col(j) = policy.input_standardizer().apply(r.x);
    out.t[j] = r.t_remaining;
  }
  return out;
}

ControlData gather(const ControlData& d, const std::vector<Eigen::Index>& idx, std::size_t begin,
                   std::size_t end) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  ControlData out{Eigen::MatrixXd(d.z.rows(), n), Eigen::MatrixXd(d.base.rows(), d.base.size() ? n : 0),
                  Eigen::MatrixXd(d.u.rows(), n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = idx[begin + static_cast<std::size_t>(j)];
    out.z.col(j) = d.z.col(src);
    out.u.col(j) = d.u.col(src);
    if (d.base.size()) out.base.col(j) = d.base.col(src);
  }
  return out;
}

TimeData gather(const TimeData& d, const std::vector<Eigen::Index>& idx, std::size_t begin,
                std::size_t end) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  TimeData out{Eigen::MatrixXd(d.z.rows(), n), Eigen::RowVectorXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = idx[begin + static_cast<std::size_t>(j)];
    out.z.col(j) = d.z.col(src);
    out.t[j] = d.t[src];
  }
  return out;
}

// Mean loss over the columns of `d`; accumulates the mean gradient.
double control_loss_impl(const Policy& policy, const ControlData& d, MlpGradient* grad) {
  const Eigen::Index n = d.z.cols();
  if (n == 0) return 0.0;
  const Eigen::MatrixXd raw = mlp_forward_batch(policy.control_mlp(), d.z);
  const Eigen::ArrayXd scale = policy.output_scale().array();
  Eigen::MatrixXd pred(d.u.rows(), n);
  Eigen::MatrixXd slope;  // d sigma / d pre for QRnet
  if (policy.architecture() == Architecture::kMlp) {
    pred = ((raw.array().colwise() * scale).colwise() + policy.output_shift().array()).matrix();
  } else {
    const Saturation& sat = policy.surrogate()->saturation;
    const Eigen::VectorXd offset = policy.output_shift() - policy.network_at_terminal();
    slope.resize(d.u.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const ControlVec pre =
          d.base.col(j) + (raw.col(j).array() * scale).matrix() + offset;
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        pred(i, j) = sat.apply(static_cast<int>(i), pre[i]);
        slope(i, j) = sat.derivative(static_cast<int>(i), pre[i]);
      }
    }
  }
  const Eigen::MatrixXd err = pred - d.u;
  const double loss = err.squaredNorm() / static_cast<double>(n);
  if (grad) {
    Eigen::MatrixXd dpre = (2.0 / static_cast<double>(n)) * err;
    if (slope.size()) dpre.array() *= slope.array();
    const Eigen::MatrixXd upstream = (dpre.array().colwise() * scale).matrix();
    mlp_gradient_batch(policy.control_mlp(), d.z, upstream, *grad);
    if (policy.architecture() == Architecture::kQrnet) {
      // N(x_f) enters every prediction with a minus sign.
      const Eigen::VectorXd zf = policy.input_standardizer().apply(policy.x_f());
      const Eigen::VectorXd up_f = -upstream.rowwise().sum();
      mlp_gradient_batch(policy.control_mlp(), zf, up_f, *grad);
    }
  }
  return loss;
}

double time_loss_impl(const Policy& policy, const TimeData& d, MlpGradient* grad) {
  const Eigen::Index n = d.z.cols();
  if (n == 0) return 0.0;
  const Eigen::RowVectorXd raw = mlp_forward_batch(policy.time_mlp(), d.z);
  const Eigen::RowVectorXd err = policy.time_scale() * raw - d.t;
  const double loss = err.squaredNorm() / static_cast<double>(n);
  if (grad) {
    const Eigen::MatrixXd upstream = (2.0 * policy.time_scale() / static_cast<double>(n)) * err;
    mlp_gradient_batch(policy.time_mlp(), d.z, upstream, *grad);
  }
  return loss;
}

void shuffle(std::vector<Eigen::Index>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

// Shared Adam loop. `loss_fn(batch, grad)` returns the batch loss.
template <typename Data, typename LossFn>
TrainReport run_training(MlpParams& params, Policy& policy, const Data& train, const Data& val,
                         bool has_val, const TrainConfig& config, std::mt19937_64& rng,
                         LossFn loss_fn) {
  TrainReport report;
  const auto n = static_cast<std::size_t>(train.z.cols());
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});

  auto val_loss = [&]() { return loss_fn(has_val ? val : train, nullptr); };
  MlpParams best = params;
  const double initial = val_loss();
  report.checks.push_back({0, loss_fn(train, nullptr), initial});
  report.best_val_loss = std::isfinite(initial) ? initial : INFINITY;
  report.best_epoch = 0;

  AdamState adam = AdamState::for_params(params);
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(idx, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n; b += batch) {
      const std::size_t e = std::min(n, b + batch);
      const Data chunk = gather(train, idx, b, e);
      MlpGradient g = MlpGradient::zeros_like(params);
      const double loss = loss_fn(chunk, &g);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("training loss became non-finite", epoch);
      }
      epoch_loss += loss * static_cast<double>(e - b);
      adam_step(params, g, adam, config.adam);
      policy.refresh_cache();
    }
    if (!params.all_finite()) throw TrainingDiverged("network weights became non-finite", epoch);
    if (epoch % config.validate_every == 0 || epoch == config.epochs) {
      const double v = val_loss();
      if (!std::isfinite(v)) throw TrainingDiverged("validation loss became non-finite", epoch);
      report.checks.push_back({epoch, epoch_loss / static_cast<double>(n), v});
      if (v < report.best_val_loss) {
        report.best_val_loss = v;
        report.best_epoch = epoch;
        best = params;
      }
    }
  }
  params = best;
  policy.refresh_cache();
  return report;
}

}  // namespace

double control_loss(const Policy& policy, const Dataset& data, MlpGradient* grad) {
  return control_loss_impl(policy, prepare_control(policy, data), grad);
}

double time_loss(const Policy& policy, const Dataset& data, MlpGradient* grad) {
  require(policy.architecture() == Architecture::kQrnet, "only QRnet policies carry a time network");
  return time_loss_impl(policy, prepare_time(policy, data), grad);
}

TrainReport train_control(Policy& policy, const Dataset& train, const Dataset& val,
                          const TrainConfig& config) {
  config.validate();
  require(!train.empty(), "training set is empty");
  const int n = policy.state_dim();
  const int m = policy.control_dim();

  Eigen::MatrixXd xs(n, static_cast<Eigen::Index>(train.size()));
  Eigen::MatrixXd us(m, static_cast<Eigen::Index>(train.size()));
  for (std::size_t j = 0; j < train.size(); ++j) {
    xs.col(static_cast<Eigen::Index>(j)) = train.records()[j].x;
    us.col(static_cast<Eigen::Index>(j)) = train.records()[j].u;
  }
  policy.input_standardizer() = Standardizer::fit(xs);

  std::mt19937_64 rng(config.seed);
  MlpParams& params = policy.control_mlp();
  params = make_control_mlp(n, m);
  glorot_init(params, rng);
  // Output layer starts at zero: a QRnet begins as its LQR surrogate and an
  // MLP as the mean control.
  params.layers.back().weight.setZero();
  params.layers.back().bias.setZero();

  if (policy.architecture() == Architecture::kMlp) {
    const Standardizer out = Standardizer::fit(us);
    policy.output_shift() = out.mean;
    policy.output_scale() = out.scale;
  } else {
    policy.output_shift().setZero(m);
    policy.refresh_cache();
    const ControlData d = prepare_control(policy, train);
    const Standardizer resid = Standardizer::fit(d.u - d.base);
    policy.output_scale() = resid.scale;
  }
  policy.refresh_cache();

  const ControlData td = prepare_control(policy, train);
  const ControlData vd = prepare_control(policy, val);
  return run_training(params, policy, td, vd, !val.empty(), config, rng,
                      [&policy](const ControlData& d, MlpGradient* g) {
                        return control_loss_impl(policy, d, g);
                      });
}

TrainReport train_timenet(Policy& policy, const Dataset& train, const Dataset& val,
                          const TrainConfig& config) {
  config.validate();
  require(policy.architecture() == Architecture::kQrnet, "only QRnet policies carry a time network");
  require(!train.empty(), "training set is empty");
  double mean_t = 0.0;
  for (const auto& r : train.records()) mean_t += r.t_remaining;
  mean_t /= static_cast<double>(train.size());
  policy.time_scale() = mean_t > 1e-8 ? mean_t : 1.0;

  std::mt19937_64 rng(config.seed);
  MlpParams& params = policy.time_mlp();
  params = make_time_mlp(policy.state_dim());
  glorot_init(params, rng);

  const TimeData td = prepare_time(policy, train);
  const TimeData vd = prepare_time(policy, val);
  return run_training(params, policy, td, vd, !val.empty(), config, rng,
                      [&policy](const TimeData& d, MlpGradient* g) {
                        return time_loss_impl(policy, d, g);
                      });
}

Policy fit_policy(Architecture arch, const Dataset& train, const Dataset& val,
                  const TrainConfig& config, const StateVec& x_f, const ControlVec& u_f,
                  const std::optional<LqrSurrogate>& surrogate, TrainReport* control_report,
                  TrainReport* time_report) {
  Policy policy(arch, static_cast<int>(x_f.size()), static_cast<int>(u_f.size()), x_f, u_f,
                arch == Architecture::kQrnet ? surrogate : std::nullopt);
  policy.set_seed(config.seed);
  TrainReport cr = train_control(policy, train, val, config);
  if (control_report) *control_report = std::move(cr);
  if (arch == Architecture::kQrnet) {
    TrainConfig tc = config;
    tc.seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
    TrainReport tr = train_timenet(policy, train, val, tc);
    if (time_report) *time_report = std::move(tr);
  }
  return policy;
}

}  // namespace ftoc
