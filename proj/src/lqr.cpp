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

#include "ftoc/lqr.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace ftoc {

RiccatiTable build_riccati_table(const ModelSpec& model, const CostSpec& cost, double horizon,
                                 double step) {
  require(horizon > 0.0 && step > 0.0, "Riccati horizon and step must be positive");
  const double ratio = horizon / step;
  const long steps = std::lround(ratio);
  require(steps >= 1 && std::abs(ratio - steps) <= 1e-9 * std::max(1.0, ratio),
          "Riccati horizon must be an integer multiple of the step");

  const int n = model.state_dim();
  const int m = model.control_dim();
  const StateVec& xf = cost.x_f;
  const ControlVec& uf = cost.u_f;

  // RK4 map linearized at the equilibrium.
  StateMat A(n, n);
  InputMat B(n, m);
  const double h = 1e-6 * std::max(1.0, xf.norm());
  for (int i = 0; i < n; ++i) {
    StateVec xp = xf, xm = xf;
    xp[i] += h;
    xm[i] -= h;
    A.col(i) = (rk4_step(model, xp, uf, step) - rk4_step(model, xm, uf, step)) / (2 * h);
  }
  for (int i = 0; i < m; ++i) {
    ControlVec up = uf, um = uf;
    up[i] += h;
    um[i] -= h;
    B.col(i) = (rk4_step(model, xf, up, step) - rk4_step(model, xf, um, step)) / (2 * h);
  }

  // Gauss-Newton quadratization in shifted coordinates. The residual
  // [sqrt(r_u)(u - u_f); sqrt(r_a) a] vanishes at the equilibrium, so the
  // linear terms are built from it and come out exactly zero.
  const CostQuadratics cq = cost_quadratics(cost, model, xf, uf);
  const DofVec a0 = forward_dynamics(model, xf, uf);
  const Linearization lin = linearize(model, xf, uf);
  const StateVec lx = step * 2.0 * cost.r_a * lin.A.bottomRows(model.dof).transpose() * a0;
  const ControlVec lu =
      step * 2.0 * (cost.r_u * (uf - uf) + cost.r_a * lin.B.bottomRows(model.dof).transpose() * a0);
  const StateMat lxx = step * cq.Lxx;
  const GainMat lux = step * cq.Lux;
  const ControlMat luu = step * cq.Luu;

  RiccatiTable table;
  table.horizon = horizon;
  table.step = step;
  table.x_f = xf;
  table.u_f = uf;
  table.entries.resize(static_cast<std::size_t>(steps) + 1);

  StateMat P = StateMat::Identity(n, n) * (2.0 * cost.r_f);
  StateVec p = StateVec::Zero(n);
  table.entries[0] = {ControlVec::Zero(m), GainMat::Zero(m, n), P};
  for (long i = 1; i <= steps; ++i) {
    const StateVec Qx = lx + A.transpose() * p;
    const ControlVec Qu = lu + B.transpose() * p;
    const StateMat Qxx = lxx + A.transpose() * P * A;
    const ControlMat Quu = luu + B.transpose() * P * B;
    const GainMat Qux = lux + B.transpose() * P * A;
    Eigen::LLT<ControlMat> llt(Quu);
    if (llt.info() != Eigen::Success) throw NumericalError("Riccati recursion: Quu not positive definite");
    const ControlVec k = -llt.solve(Qu);
    const GainMat K = -llt.solve(Qux);
    StateMat Pn = Qxx + K.transpose() * Quu * K + K.transpose() * Qux + Qux.transpose() * K;
    Pn = 0.5 * (Pn + Pn.transpose());
    p = Qx + K.transpose() * Quu * k + K.transpose() * Qu + Qux.transpose() * k;
    P = Pn;
    if (!P.allFinite()) throw NumericalError("Riccati recursion diverged");
    Eigen::SelfAdjointEigenSolver<StateMat> eig(P, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
      throw NumericalError("Riccati recursion produced an indefinite P");
    }
    table.entries[static_cast<std::size_t>(i)] = {k, K, P};
  }
  return table;
}

void BlendSchedule::validate() const {
  if (!(t_m > 0.0) || !(t_M > t_m) || !(eps > 0.0 && eps < 0.5)) {
    throw ContractError("blend schedule needs 0 < t_m < t_M and 0 < eps < 0.5");
  }
}

double BlendSchedule::logit_low() const { return std::log(eps / (1.0 - eps)); }

double BlendSchedule::logit_high() const { return std::log((1.0 - eps) / eps); }

double BlendSchedule::weight(double remaining) const {
  if (remaining < t_m) return 1.0;
  if (remaining > t_M) return 0.0;
  const double lo = logit_low();
  const double hi = logit_high();
  const double z = -(remaining - t_m) * (hi - lo) / (t_M - t_m) + hi;
  return 1.0 / (1.0 + std::exp(-z));
}

std::pair<ControlVec, GainMat> lookup_gains(const RiccatiTable& table, const BlendSchedule& blend,
                                            double remaining) {
  require(!table.entries.empty(), "empty Riccati table");
  require(remaining >= 0.0, "remaining time must be non-negative");
  const RiccatiEntry& first = table.entries.front();
  const double s = blend.weight(remaining);
  if (s == 0.0) {
    return {ControlVec::Zero(first.k.size()), GainMat::Zero(first.K.rows(), first.K.cols())};
  }
  const int last = table.last_index();
  const double pos = std::min(remaining / table.step, static_cast<double>(last));
  const int lo = static_cast<int>(std::floor(pos));
  const double frac = pos - lo;
  ControlVec k = table.entries[lo].k;
  GainMat K = table.entries[lo].K;
  if (frac > 0.0 && lo < last) {
    k = (1.0 - frac) * k + frac * table.entries[lo + 1].k;
    K = (1.0 - frac) * K + frac * table.entries[lo + 1].K;
  }
  return {s * k, s * K};
}

ControlVec u_lqr(const RiccatiTable& table, const BlendSchedule& blend, const StateVec& x,
                 double tf_hat) {
  const auto [k, K] = lookup_gains(table, blend, tf_hat);
  return table.u_f + k + K * (x - table.x_f);
}

Saturation::Saturation(ControlVec u_min, ControlVec u_max, ControlVec u1)
    : u_min_(std::move(u_min)), u_max_(std::move(u_max)), u1_(std::move(u1)) {
  require(u_min_.size() == u1_.size() && u_max_.size() == u1_.size(), "saturation size mismatch");
  c1_.resize(u1_.size());
  c2_.resize(u1_.size());
  for (int i = 0; i < u1_.size(); ++i) {
    if (!(u_min_[i] < u1_[i] && u1_[i] < u_max_[i])) {
      throw DomainError("saturation needs u_min < u_f < u_max in every coordinate");
    }
    const double above = u_max_[i] - u1_[i];
    const double below = u1_[i] - u_min_[i];
    c1_[i] = above / below;
    c2_[i] = (u_max_[i] - u_min_[i]) / (above * below);
  }
}

Saturation Saturation::uniform(const ControlVec& u1, double u_min, double u_max) {
  return Saturation(ControlVec::Constant(u1.size(), u_min), ControlVec::Constant(u1.size(), u_max),
                    u1);
}

// sigma(u) = u_min + (u_max - u_min) / (1 + c1 exp(-c2 (u - u1))), rewritten
// about u1 so that sigma(u1) == u1 in floating point:
//   sigma(u) = u1 + (u_max - u1) (1 - E) / (1 + c1 E),  E = exp(-c2 (u - u1)).
double Saturation::apply(int i, double u) const {
  const double d = u - u1_[i];
  const double above = u_max_[i] - u1_[i];
  if (d >= 0.0) {
    const double E = std::exp(-c2_[i] * d);
    return u1_[i] - above * std::expm1(-c2_[i] * d) / (1.0 + c1_[i] * E);
  }
  // Divide through by E to avoid overflow for large negative d.
  const double F = std::exp(c2_[i] * d);
  return u1_[i] + above * std::expm1(c2_[i] * d) / (F + c1_[i]);
}

double Saturation::derivative(int i, double u) const {
  const double d = u - u1_[i];
  const double width = u_max_[i] - u_min_[i];
  if (d >= 0.0) {
    const double E = std::exp(-c2_[i] * d);
    const double den = 1.0 + c1_[i] * E;
    return width * c1_[i] * c2_[i] * E / (den * den);
  }
  const double F = std::exp(c2_[i] * d);
  const double den = F + c1_[i];
  return width * c1_[i] * c2_[i] * F / (den * den);
}

ControlVec Saturation::apply(const ControlVec& u) const {
  ControlVec out(u.size());
  for (int i = 0; i < u.size(); ++i) out[i] = apply(i, u[i]);
  return out;
}

ControlVec Saturation::jacobian_diagonal(const ControlVec& u) const {
  ControlVec out(u.size());
  for (int i = 0; i < u.size(); ++i) out[i] = derivative(i, u[i]);
  return out;
}

ControlMat Saturation::jacobian(const ControlVec& u) const {
  return jacobian_diagonal(u).asDiagonal();
}

}  // namespace ftoc
