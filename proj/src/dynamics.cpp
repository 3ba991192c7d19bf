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

#include "ftoc/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

namespace ftoc {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDoubleIntegrator1d:
      return "double-integrator-1d";
    case ModelKind::kPlanarArm:
      return "planar-arm";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "double-integrator-1d") return ModelKind::kDoubleIntegrator1d;
  if (name == "planar-arm") return ModelKind::kPlanarArm;
  throw DomainError("unknown model kind: " + name);
}

void ModelSpec::validate() const {
  if (dof < 1 || dof > kMaxDof) throw DomainError("dof must be in {1,2,3}");
  if (kind == ModelKind::kDoubleIntegrator1d) {
    if (dof != 1) throw DomainError("double integrator has exactly one dof");
  } else {
    if (static_cast<int>(links.size()) != dof) throw DomainError("need one link per dof");
    for (const auto& link : links) {
      if (!(link.mass > 0.0) || !(link.length > 0.0) || !(link.inertia > 0.0)) {
        throw DomainError("link mass, length and inertia must be strictly positive");
      }
      if (!std::isfinite(link.com_offset)) throw DomainError("non-finite center of mass offset");
    }
    if (!std::isfinite(gravity)) throw DomainError("non-finite gravity");
  }
  if (!(damping >= 0.0)) throw DomainError("damping must be non-negative");
}

ModelSpec ModelSpec::double_integrator() {
  ModelSpec m;
  m.kind = ModelKind::kDoubleIntegrator1d;
  m.dof = 1;
  m.links.clear();
  m.gravity = 0.0;
  return m;
}

ModelSpec ModelSpec::planar_arm(int dof) {
  ModelSpec m;
  m.kind = ModelKind::kPlanarArm;
  m.dof = dof;
  m.links.assign(static_cast<std::size_t>(dof), LinkParams{});
  return m;
}

namespace {

void check_state(const ModelSpec& model, const StateVec& x) {
  if (x.size() != model.state_dim()) throw ContractError("state dimension mismatch");
  if (!x.allFinite()) throw DomainError("non-finite state");
}

void check_control(const ModelSpec& model, const ControlVec& u) {
  if (u.size() != model.control_dim()) throw ContractError("control dimension mismatch");
  if (!u.allFinite()) throw DomainError("non-finite control");
}

// Absolute link angles and angular rates of a planar chain.
struct ChainKinematics {
  double cos_abs[kMaxDof];
  double sin_abs[kMaxDof];
  double omega[kMaxDof];
};

ChainKinematics chain_kinematics(int dof, const StateVec& x) {
  ChainKinematics k{};
  double theta = 0.0;
  double omega = 0.0;
  for (int i = 0; i < dof; ++i) {
    theta += x[i];
    omega += x[dof + i];
    k.cos_abs[i] = std::cos(theta);
    k.sin_abs[i] = std::sin(theta);
    k.omega[i] = omega;
  }
  return k;
}

// Jacobian of the center of mass of link `i` w.r.t. q (2 x dof).
BoundedMat<2, kMaxDof> com_jacobian(const ModelSpec& model, const ChainKinematics& k, int i) {
  const int dof = model.dof;
  BoundedMat<2, kMaxDof> J = BoundedMat<2, kMaxDof>::Zero(2, dof);
  for (int j = 0; j <= i; ++j) {
    const double reach = (j < i) ? model.links[j].length : model.links[i].com_offset;
    // Every q_col with col <= j rotates segment j.
    for (int col = 0; col <= j; ++col) {
      J(0, col) -= reach * k.sin_abs[j];
      J(1, col) += reach * k.cos_abs[j];
    }
  }
  return J;
}

}  // namespace

ManipulatorTerms manipulator_terms(const ModelSpec& model, const StateVec& x) {
  check_state(model, x);
  const int dof = model.dof;
  ManipulatorTerms t;
  t.mass = DofMat::Zero(dof, dof);
  t.coriolis = DofVec::Zero(dof);
  t.gravity = DofVec::Zero(dof);
  if (model.kind == ModelKind::kDoubleIntegrator1d) {
    t.mass(0, 0) = 1.0;
    return t;
  }

  const ChainKinematics k = chain_kinematics(dof, x);
  for (int i = 0; i < dof; ++i) {
    const LinkParams& link = model.links[i];
    const auto J = com_jacobian(model, k, i);
    t.mass.noalias() += link.mass * J.transpose() * J;
    // Angular velocity Jacobian is ones up to and including joint i.
    t.mass.topLeftCorner(i + 1, i + 1).array() += link.inertia;

    // Velocity-product part of the COM acceleration, Jdot * v.
    Eigen::Vector2d centripetal = Eigen::Vector2d::Zero();
    for (int j = 0; j <= i; ++j) {
      const double reach = (j < i) ? model.links[j].length : link.com_offset;
      const double w2 = k.omega[j] * k.omega[j];
      centripetal.x() -= reach * w2 * k.cos_abs[j];
      centripetal.y() -= reach * w2 * k.sin_abs[j];
    }
    t.coriolis.noalias() += link.mass * J.transpose() * centripetal;
    t.gravity.noalias() += link.mass * model.gravity * J.row(1).transpose();
  }
  return t;
}

DofVec gravity_terms(const ModelSpec& model, const DofVec& q) {
  StateVec x = StateVec::Zero(model.state_dim());
  x.head(model.dof) = q;
  return manipulator_terms(model, x).gravity;
}

DofVec forward_dynamics(const ModelSpec& model, const StateVec& x, const ControlVec& u) {
  check_control(model, u);
  const ManipulatorTerms t = manipulator_terms(model, x);
  const int dof = model.dof;
  DofVec rhs = u - t.coriolis - t.gravity - model.damping * x.tail(dof);
  if (dof == 1) {
    if (!(t.mass(0, 0) > 0.0)) throw NumericalError("singular mass matrix");
    DofVec a(1);
    a[0] = rhs[0] / t.mass(0, 0);
    return a;
  }
  Eigen::LLT<DofMat> llt(t.mass);
  if (llt.info() != Eigen::Success) throw NumericalError("mass matrix is not positive definite");
  return llt.solve(rhs);
}

StateVec vector_field(const ModelSpec& model, const StateVec& x, const ControlVec& u) {
  const int dof = model.dof;
  StateVec dx(model.state_dim());
  dx.head(dof) = x.tail(dof);
  dx.tail(dof) = forward_dynamics(model, x, u);
  return dx;
}

StateVec rk4_step(const ModelSpec& model, const StateVec& x, const ControlVec& u, double dt) {
  const StateVec k1 = vector_field(model, x, u);
  const StateVec k2 = vector_field(model, x + 0.5 * dt * k1, u);
  const StateVec k3 = vector_field(model, x + 0.5 * dt * k2, u);
  const StateVec k4 = vector_field(model, x + dt * k3, u);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Linearization linearize(const ModelSpec& model, const StateVec& x, const ControlVec& u) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  const double h = 1e-6 * std::max(1.0, x.norm());
  Linearization lin;
  lin.A.resize(n, n);
  lin.B.resize(n, m);
  for (int i = 0; i < n; ++i) {
    StateVec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    lin.A.col(i) = (vector_field(model, xp, u) - vector_field(model, xm, u)) / (2.0 * h);
  }
  for (int i = 0; i < m; ++i) {
    ControlVec up = u, um = u;
    up[i] += h;
    um[i] -= h;
    lin.B.col(i) = (vector_field(model, x, up) - vector_field(model, x, um)) / (2.0 * h);
  }
  return lin;
}

double mechanical_energy(const ModelSpec& model, const StateVec& x) {
  const ManipulatorTerms t = manipulator_terms(model, x);
  const int dof = model.dof;
  const DofVec v = x.tail(dof);
  double energy = 0.5 * v.dot(t.mass * v);
  if (model.kind == ModelKind::kPlanarArm) {
    double theta = 0.0;
    double y_joint = 0.0;
    for (int i = 0; i < dof; ++i) {
      theta += x[i];
      const auto& link = model.links[i];
      energy += link.mass * model.gravity * (y_joint + link.com_offset * std::sin(theta));
      y_joint += link.length * std::sin(theta);
    }
  }
  return energy;
}

void CostSpec::validate(const ModelSpec& model) const {
  if (!(r_t > 0.0) || !(r_u > 0.0) || !(r_a >= 0.0) || !(r_f > 0.0)) {
    throw DomainError("cost weights must satisfy r_t > 0, r_u > 0, r_a >= 0, r_f > 0");
  }
  if (x_f.size() != model.state_dim() || u_f.size() != model.control_dim()) {
    throw DomainError("terminal state/control dimension mismatch");
  }
  if (!x_f.allFinite() || !u_f.allFinite()) throw DomainError("non-finite terminal point");
  if (x_f.tail(model.dof).cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("terminal state must have zero velocity");
  }
  const DofVec g = gravity_terms(model, x_f.head(model.dof));
  if ((g - u_f).norm() > 1e-12 * std::max(1.0, g.norm())) {
    throw DomainError("u_f must equal the gravity torque at q_f");
  }
}

CostSpec make_cost(const ModelSpec& model, const DofVec& q_f, double r_t, double r_u, double r_a,
                   double r_f) {
  model.validate();
  if (q_f.size() != model.dof) throw DomainError("q_f dimension mismatch");
  CostSpec c;
  c.r_t = r_t;
  c.r_u = r_u;
  c.r_a = r_a;
  c.r_f = r_f;
  c.x_f = StateVec::Zero(model.state_dim());
  c.x_f.head(model.dof) = q_f;
  c.u_f = gravity_terms(model, q_f);
  c.validate(model);
  return c;
}

double running_cost(const CostSpec& cost, const ModelSpec& model, const StateVec& x,
                    const ControlVec& u) {
  const DofVec a = forward_dynamics(model, x, u);
  return cost.r_t + cost.r_u * (u - cost.u_f).squaredNorm() + cost.r_a * a.squaredNorm();
}

double terminal_cost(const CostSpec& cost, const StateVec& x) {
  return cost.r_f * (x - cost.x_f).squaredNorm();
}

CostQuadratics cost_quadratics(const CostSpec& cost, const ModelSpec& model, const StateVec& x,
                               const ControlVec& u) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  const int dof = model.dof;
  constexpr double h = 1e-6;

  // Penalty part of L (L minus the constant r_t) as a function of a and u.
  auto penalty = [&](const ControlVec& uu, const DofVec& a) {
    return cost.r_u * (uu - cost.u_f).squaredNorm() + cost.r_a * a.squaredNorm();
  };

  CostQuadratics q;
  const DofVec a0 = forward_dynamics(model, x, u);
  q.L = cost.r_t + penalty(u, a0);

  // Jacobian of the acceleration, columns ordered (x, u).
  BoundedMat<kMaxDof, kMaxState + kMaxDof> Ja(dof, n + m);
  StateVec gx(n);
  ControlVec gu(m);
  for (int i = 0; i < n; ++i) {
    StateVec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const DofVec ap = forward_dynamics(model, xp, u);
    const DofVec am = forward_dynamics(model, xm, u);
    Ja.col(i) = (ap - am) / (2.0 * h);
    gx[i] = (penalty(u, ap) - penalty(u, am)) / (2.0 * h);
  }
  for (int i = 0; i < m; ++i) {
    ControlVec up = u, um = u;
    up[i] += h;
    um[i] -= h;
    const DofVec ap = forward_dynamics(model, x, up);
    const DofVec am = forward_dynamics(model, x, um);
    Ja.col(n + i) = (ap - am) / (2.0 * h);
    gu[i] = (penalty(up, ap) - penalty(um, am)) / (2.0 * h);
  }
  q.Lx = gx;
  q.Lu = gu;

  const auto Jx = Ja.leftCols(n);
  const auto Ju = Ja.rightCols(m);
  q.Lxx = 2.0 * cost.r_a * Jx.transpose() * Jx;
  q.Lux = 2.0 * cost.r_a * Ju.transpose() * Jx;
  q.Luu = 2.0 * cost.r_a * Ju.transpose() * Ju;
  q.Luu.diagonal().array() += 2.0 * cost.r_u;
  return q;
}

}  // namespace ftoc
