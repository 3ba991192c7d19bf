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

#include "ftoc/mlp.hpp"

#include <cmath>

#include "ftoc/types.hpp"

namespace ftoc {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kElu:
      return "elu";
    case Activation::kLinear:
      return "linear";
    case Activation::kSoftplus:
      return "softplus";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "elu") return Activation::kElu;
  if (name == "linear") return Activation::kLinear;
  if (name == "softplus") return Activation::kSoftplus;
  throw DomainError("unknown activation: " + name);
}

std::size_t MlpParams::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) count += l.weight.size() + l.bias.size();
  return count;
}

MlpParams MlpParams::zeros(const std::vector<int>& sizes,
                           const std::vector<Activation>& activations) {
  require(sizes.size() >= 2 && activations.size() == sizes.size() - 1,
          "need one activation per layer");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    require(sizes[i] > 0 && sizes[i + 1] > 0, "layer widths must be positive");
    p.layers.push_back({Eigen::MatrixXd::Zero(sizes[i + 1], sizes[i]),
                        Eigen::VectorXd::Zero(sizes[i + 1]), activations[i]});
  }
  return p;
}

bool MlpParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

MlpParams make_control_mlp(int input_dim, int output_dim) {
  using A = Activation;
  return MlpParams::zeros({input_dim, 32, 64, 64, 32, output_dim},
                          {A::kTanh, A::kTanh, A::kElu, A::kElu, A::kLinear});
}

MlpParams make_time_mlp(int input_dim) {
  using A = Activation;
  return MlpParams::zeros({input_dim, 32, 64, 64, 32, 1},
                          {A::kElu, A::kElu, A::kElu, A::kElu, A::kSoftplus});
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void glorot_init(MlpParams& params, std::mt19937_64& rng) {
  for (auto& l : params.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    for (Eigen::Index j = 0; j < l.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < l.weight.rows(); ++i) {
        l.weight(i, j) = limit * (2.0 * uniform01(rng) - 1.0);
      }
    }
    l.bias.setZero();
  }
}

namespace {

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }

template <typename Derived>
void activate(Eigen::ArrayBase<Derived>&& z, Activation a) {
  switch (a) {
    case Activation::kTanh:
      z = z.tanh();
      break;
    case Activation::kElu:
      z = (z > 0.0).select(z, z.unaryExpr([](double v) { return std::expm1(v); }));
      break;
    case Activation::kSoftplus:
      z = z.unaryExpr([](double v) { return softplus(v); });
      break;
    case Activation::kLinear:
      break;
  }
}

// Derivative of the activation written in terms of its pre-activation z and
// output y.
double activation_slope(Activation a, double z, double y) {
  switch (a) {
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kElu:
      return z > 0.0 ? 1.0 : y + 1.0;
    case Activation::kSoftplus:
      return 1.0 / (1.0 + std::exp(-z));
    case Activation::kLinear:
      return 1.0;
  }
  return 1.0;
}

void check_input(const MlpParams& p, Eigen::Index rows) {
  require(!p.layers.empty(), "network has no layers");
  require(rows == p.input_dim(), "network input dimension mismatch");
}

}  // namespace

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& x) {
  check_input(params, x.size());
  Eigen::VectorXd a = x;
  for (const auto& l : params.layers) {
    Eigen::VectorXd z = l.weight * a + l.bias;
    activate(z.array(), l.activation);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs) {
  check_input(params, inputs.rows());
  Eigen::MatrixXd a = inputs;
  for (const auto& l : params.layers) {
    Eigen::MatrixXd z(l.weight.rows(), a.cols());
    z.noalias() = l.weight * a;
    z.colwise() += l.bias;
    activate(z.array(), l.activation);
    a = std::move(z);
  }
  return a;
}

MlpGradient MlpGradient::zeros_like(const MlpParams& params) {
  MlpGradient g;
  for (const auto& l : params.layers) {
    g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

void MlpGradient::scale(double factor) {
  for (auto& w : weight) w *= factor;
  for (auto& b : bias) b *= factor;
}

void MlpGradient::add(const MlpGradient& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
}

void mlp_gradient_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& upstream, MlpGradient& grad) {
  check_input(params, inputs.rows());
  const std::size_t L = params.layers.size();
  require(upstream.rows() == params.output_dim() && upstream.cols() == inputs.cols(),
          "upstream shape mismatch");
  require(grad.weight.size() == L, "gradient container does not match the network");

  // Keep pre-activations and outputs of every layer.
  std::vector<Eigen::MatrixXd> pre(L), post(L);
  const Eigen::MatrixXd* a = &inputs;
  for (std::size_t i = 0; i < L; ++i) {
    const auto& l = params.layers[i];
    pre[i].resize(l.weight.rows(), a->cols());
    pre[i].noalias() = l.weight * (*a);
    pre[i].colwise() += l.bias;
    post[i] = pre[i];
    activate(post[i].array(), l.activation);
    a = &post[i];
  }

  Eigen::MatrixXd delta = upstream;
  for (std::size_t ii = L; ii-- > 0;) {
    const auto& l = params.layers[ii];
    if (l.activation != Activation::kLinear) {
      for (Eigen::Index c = 0; c < delta.cols(); ++c) {
        for (Eigen::Index r = 0; r < delta.rows(); ++r) {
          delta(r, c) *= activation_slope(l.activation, pre[ii](r, c), post[ii](r, c));
        }
      }
    }
    const Eigen::MatrixXd& input = (ii == 0) ? inputs : post[ii - 1];
    grad.weight[ii].noalias() += delta * input.transpose();
    grad.bias[ii] += delta.rowwise().sum();
    if (ii > 0) {
      Eigen::MatrixXd next(l.weight.cols(), delta.cols());
      next.noalias() = l.weight.transpose() * delta;
      delta = std::move(next);
    }
  }
}

MlpGradient mlp_gradient(const MlpParams& params, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& upstream) {
  MlpGradient g = MlpGradient::zeros_like(params);
  mlp_gradient_batch(params, x, upstream, g);
  return g;
}

AdamState AdamState::for_params(const MlpParams& params) {
  return {MlpGradient::zeros_like(params), MlpGradient::zeros_like(params), 0};
}

void adam_step(MlpParams& params, const MlpGradient& grad, AdamState& state,
               const AdamConfig& config) {
  require(grad.weight.size() == params.layers.size(), "gradient/parameter shape mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    param.array() -= config.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + config.epsilon);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, grad.weight[i], state.first.weight[i], state.second.weight[i]);
    update(params.layers[i].bias, grad.bias[i], state.first.bias[i], state.second.bias[i]);
  }
}

}  // namespace ftoc
