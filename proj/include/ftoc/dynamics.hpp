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

// Analytic manipulator models and the running/terminal costs of the
// reaching problem.
//
// Planar arms move in a vertical plane. Joint angles are relative, the first
// measured from the horizontal axis, and gravity acts along -y. The equations
// of motion are
//
//   M(q) a + c(q, v) + g(q) + D v = u
//
// with c = C(q, v) v the Coriolis/centrifugal torque.

#ifndef FTOC_DYNAMICS_HPP_
#define FTOC_DYNAMICS_HPP_

#include <string>
#include <vector>

#include "ftoc/types.hpp"

namespace ftoc {

enum class ModelKind { kDoubleIntegrator1d, kPlanarArm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct LinkParams {
  double mass = 1.0;         // kg
  double length = 1.0;       // m
  double com_offset = 0.5;   // m, from the proximal joint along the link
  double inertia = 1.0 / 12.0;  // kg m^2 about the center of mass
};

struct ModelSpec {
  ModelKind kind = ModelKind::kPlanarArm;
  int dof = 2;
  std::vector<LinkParams> links = std::vector<LinkParams>(2);
  double gravity = 9.81;   // m/s^2
  double damping = 0.0;    // N m s / rad, viscous, same for every joint

  int state_dim() const { return 2 * dof; }
  int control_dim() const { return dof; }

  /// Throws DomainError if the parameters are not physically valid.
  void validate() const;

  static ModelSpec double_integrator();
  /// Uniform slender links (mass 1 kg, length 1 m) with `dof` joints.
  static ModelSpec planar_arm(int dof);
};

struct ManipulatorTerms {
  DofMat mass;      // M(q)
  DofVec coriolis;  // c = C(q, v) v
  DofVec gravity;   // g(q)
};

ManipulatorTerms manipulator_terms(const ModelSpec& model, const StateVec& x);

/// Gravity torque at rest, g(q).
DofVec gravity_terms(const ModelSpec& model, const DofVec& q);

/// Solves M a + c + g + D v = u for the joint accelerations.
DofVec forward_dynamics(const ModelSpec& model, const StateVec& x, const ControlVec& u);

/// xdot = (v, a(x, u)).
StateVec vector_field(const ModelSpec& model, const StateVec& x, const ControlVec& u);

/// One classical Runge-Kutta step with the control held over the step.
StateVec rk4_step(const ModelSpec& model, const StateVec& x, const ControlVec& u, double dt);

struct Linearization {
  StateMat A;  // df/dx
  InputMat B;  // df/du
};

/// Central finite-difference Jacobians of the vector field, step
/// 1e-6 * max(1, |x|).
Linearization linearize(const ModelSpec& model, const StateVec& x, const ControlVec& u);

/// Kinetic plus potential energy; used to check integrators.
double mechanical_energy(const ModelSpec& model, const StateVec& x);

struct CostSpec {
  double r_t = 100.0;    // time
  double r_u = 0.025;    // control effort about u_f
  double r_a = 0.005;    // joint acceleration
  double r_f = 2.5e5;    // terminal state error
  StateVec x_f;
  ControlVec u_f;

  /// Checks weights and that (x_f, u_f) is a static point of `model`.
  void validate(const ModelSpec& model) const;
};

/// Builds a cost whose terminal state is (q_f, 0) and u_f = g(q_f).
CostSpec make_cost(const ModelSpec& model, const DofVec& q_f, double r_t, double r_u, double r_a,
                   double r_f);

/// L(x, u) = r_t + r_u |u - u_f|^2 + r_a |a(x, u)|^2.
double running_cost(const CostSpec& cost, const ModelSpec& model, const StateVec& x,
                    const ControlVec& u);

/// r_f |x - x_f|^2.
double terminal_cost(const CostSpec& cost, const StateVec& x);

struct CostQuadratics {
  double L = 0.0;
  StateVec Lx;
  ControlVec Lu;
  StateMat Lxx;
  GainMat Lux;  // m x n, d^2 L / du dx
  ControlMat Luu;
};

/// First derivatives by central differences of the running cost; second
/// derivatives by Gauss-Newton on the residual [sqrt(r_u)(u - u_f);
/// sqrt(r_a) a(x, u)], so Luu is positive semidefinite.
CostQuadratics cost_quadratics(const CostSpec& cost, const ModelSpec& model, const StateVec& x,
                               const ControlVec& u);

}  // namespace ftoc

#endif  // FTOC_DYNAMICS_HPP_
