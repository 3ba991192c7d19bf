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

// Dense feed-forward networks with hand-written backpropagation and Adam.

#ifndef FTOC_MLP_HPP_
#define FTOC_MLP_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ftoc {

enum class Activation { kTanh, kElu, kLinear, kSoftplus };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kLinear;
};

struct MlpParams {
  std::vector<DenseLayer> layers;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  std::size_t parameter_count() const;

  /// Zero-initialized network with the given layer widths (input first).
  static MlpParams zeros(const std::vector<int>& sizes, const std::vector<Activation>& activations);
  bool all_finite() const;
};

/// Control head: 32-64-64-32 hidden, tanh tanh elu elu, linear output.
MlpParams make_control_mlp(int input_dim, int output_dim);
/// Terminal-time head: same widths, elu throughout, softplus output.
MlpParams make_time_mlp(int input_dim);

/// Uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
void glorot_init(MlpParams& params, std::mt19937_64& rng);

/// Uniform double in [0, 1) from the top 53 bits of the generator.
double uniform01(std::mt19937_64& rng);

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& x);
/// Column-per-sample batch forward.
Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Gradient container with the same shapes as MlpParams.
struct MlpGradient {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static MlpGradient zeros_like(const MlpParams& params);
  void scale(double factor);
  void add(const MlpGradient& other);
};

/// Gradient of <upstream, mlp_forward(params, x)> w.r.t. every weight and bias.
MlpGradient mlp_gradient(const MlpParams& params, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& upstream);

/// Summed over columns of `inputs`/`upstream`. Accumulates into `grad`.
void mlp_gradient_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& upstream, MlpGradient& grad);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  MlpGradient first;
  MlpGradient second;
  long step = 0;

  static AdamState for_params(const MlpParams& params);
};

void adam_step(MlpParams& params, const MlpGradient& grad, AdamState& state,
               const AdamConfig& config);

}  // namespace ftoc

#endif  // FTOC_MLP_HPP_
