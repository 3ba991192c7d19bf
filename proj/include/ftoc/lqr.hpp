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

// Finite-horizon LQR at the terminal equilibrium, indexed by remaining time,
// plus the gain blend and the torque saturation used by QRnet policies.

#ifndef FTOC_LQR_HPP_
#define FTOC_LQR_HPP_

#include <utility>
#include <vector>

#include "ftoc/dynamics.hpp"

namespace ftoc {

struct RiccatiEntry {
  ControlVec k;  // affine gain
  GainMat K;     // feedback gain
  StateMat P;    // value Hessian, V = 0.5 dx' P dx
};

struct RiccatiTable {
  double horizon = 0.0;  // T (s)
  double step = 0.0;     // grid step (s)
  StateVec x_f;
  ControlVec u_f;
  std::vector<RiccatiEntry> entries;  // entries[i] at remaining time i * step

  int last_index() const { return static_cast<int>(entries.size()) - 1; }
};

/// Backward discrete Riccati recursion for the RK4-discretized dynamics
/// linearized at (x_f, u_f), starting from P_0 = 2 r_f I. Entry 0 carries
/// zero gains.
RiccatiTable build_riccati_table(const ModelSpec& model, const CostSpec& cost, double horizon,
                                 double step);

/// Ramp s(t): 1 below t_m, 0 above t_M, logistic in between with
/// s(t_m) = 1 - eps and s(t_M) = eps.
struct BlendSchedule {
  double t_m = 0.08;
  double t_M = 0.8;
  double eps = 1e-5;

  void validate() const;
  double logit_low() const;   // t_min, Sigmoid(t_min) = eps
  double logit_high() const;  // t_max, Sigmoid(t_max) = 1 - eps
  double weight(double remaining) const;
};

/// Interpolated gains at `remaining`, clamped to the table, scaled by s.
std::pair<ControlVec, GainMat> lookup_gains(const RiccatiTable& table, const BlendSchedule& blend,
                                            double remaining);

/// u_f + k(tf_hat) + K(tf_hat) (x - x_f) with blended gains.
ControlVec u_lqr(const RiccatiTable& table, const BlendSchedule& blend, const StateVec& x,
                 double tf_hat);

/// Coordinate-wise logistic squashing into (u_min, u_max) with sigma(u1) =
/// u1 and unit slope at u1.
class Saturation {
 public:
  Saturation() = default;
  Saturation(ControlVec u_min, ControlVec u_max, ControlVec u1);
  static Saturation uniform(const ControlVec& u1, double u_min, double u_max);

  ControlVec apply(const ControlVec& u) const;
  /// Diagonal of d sigma / du.
  ControlVec jacobian_diagonal(const ControlVec& u) const;
  ControlMat jacobian(const ControlVec& u) const;

  double apply(int i, double u) const;
  double derivative(int i, double u) const;

  const ControlVec& u_min() const { return u_min_; }
  const ControlVec& u_max() const { return u_max_; }
  const ControlVec& center() const { return u1_; }

 private:
  ControlVec u_min_, u_max_, u1_;
  ControlVec c1_, c2_;
};

}  // namespace ftoc

#endif  // FTOC_LQR_HPP_
