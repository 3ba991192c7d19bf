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

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "ftoc/dynamics.hpp"

namespace ftoc {
namespace {

StateVec make_state(std::initializer_list<double> values) {
  StateVec x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) x[i++] = v;
  return x;
}

ControlVec make_control(std::initializer_list<double> values) {
  ControlVec u(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) u[i++] = v;
  return u;
}

StateVec random_state(int dof, std::mt19937_64& rng, double vel_scale = 1.0) {
  std::uniform_real_distribution<double> q(-3.0, 3.0), v(-vel_scale, vel_scale);
  StateVec x(2 * dof);
  for (int i = 0; i < dof; ++i) {
    x[i] = q(rng);
    x[dof + i] = v(rng);
  }
  return x;
}

ControlVec random_control(int dof, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  ControlVec out(dof);
  for (int i = 0; i < dof; ++i) out[i] = u(rng);
  return out;
}

// Textbook two-link equations with the relative second joint angle.
struct TwoLink {
  Eigen::Matrix2d M;
  Eigen::Vector2d c, g;
};

TwoLink two_link_reference(const ModelSpec& m, double q1, double q2, double v1, double v2) {
  const auto& a = m.links[0];
  const auto& b = m.links[1];
  const double c2 = std::cos(q2), s2 = std::sin(q2);
  TwoLink r;
  r.M(0, 0) = a.mass * a.com_offset * a.com_offset + a.inertia +
              b.mass * (a.length * a.length + b.com_offset * b.com_offset +
                        2 * a.length * b.com_offset * c2) +
              b.inertia;
  r.M(0, 1) = b.mass * (b.com_offset * b.com_offset + a.length * b.com_offset * c2) + b.inertia;
  r.M(1, 0) = r.M(0, 1);
  r.M(1, 1) = b.mass * b.com_offset * b.com_offset + b.inertia;
  const double h = -b.mass * a.length * b.com_offset * s2;
  r.c << h * (2 * v1 * v2 + v2 * v2), -h * v1 * v1;
  r.g << (a.mass * a.com_offset + b.mass * a.length) * m.gravity * std::cos(q1) +
             b.mass * b.com_offset * m.gravity * std::cos(q1 + q2),
      b.mass * b.com_offset * m.gravity * std::cos(q1 + q2);
  return r;
}

// Lagrangian of a planar chain from explicit center-of-mass kinematics.
double lagrangian(const ModelSpec& m, const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
  double theta = 0.0, omega = 0.0;
  Eigen::Vector2d joint = Eigen::Vector2d::Zero(), joint_vel = Eigen::Vector2d::Zero();
  double kinetic = 0.0, potential = 0.0;
  for (int i = 0; i < m.dof; ++i) {
    const auto& link = m.links[i];
    theta += q[i];
    omega += v[i];
    const Eigen::Vector2d dir(std::cos(theta), std::sin(theta));
    const Eigen::Vector2d perp(-std::sin(theta), std::cos(theta));
    const Eigen::Vector2d com = joint + link.com_offset * dir;
    const Eigen::Vector2d com_vel = joint_vel + link.com_offset * omega * perp;
    kinetic += 0.5 * link.mass * com_vel.squaredNorm() + 0.5 * link.inertia * omega * omega;
    potential += link.mass * m.gravity * com.y();
    joint += link.length * dir;
    joint_vel += link.length * omega * perp;
  }
  return kinetic - potential;
}

// Joint torque from the Euler-Lagrange equations by finite differences.
Eigen::VectorXd lagrange_torque(const ModelSpec& m, const Eigen::VectorXd& q, const Eigen::VectorXd& v,
                                const Eigen::VectorXd& a) {
  const int n = m.dof;
  auto dldv = [&](const Eigen::VectorXd& qq, const Eigen::VectorXd& vv) {
    Eigen::VectorXd g(n);
    const double h = 1e-3;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd vp = vv, vm = vv;
      vp[i] += h;
      vm[i] -= h;
      g[i] = (lagrangian(m, qq, vp) - lagrangian(m, qq, vm)) / (2 * h);
    }
    return g;
  };
  const double h2 = 1e-4;
  const Eigen::VectorXd ddt =
      (dldv(q + h2 * v, v + h2 * a) - dldv(q - h2 * v, v - h2 * a)) / (2 * h2);
  Eigen::VectorXd dldq(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd qp = q, qm = q;
    qp[i] += 1e-5;
    qm[i] -= 1e-5;
    dldq[i] = (lagrangian(m, qp, v) - lagrangian(m, qm, v)) / 2e-5;
  }
  return ddt - dldq;
}

TEST(ManipulatorTerms, DoubleIntegratorIsTrivial) {
  const ModelSpec m = ModelSpec::double_integrator();
  const auto t = manipulator_terms(m, make_state({3.0, -2.0}));
  EXPECT_EQ(t.mass(0, 0), 1.0);
  EXPECT_EQ(t.coriolis[0], 0.0);
  EXPECT_EQ(t.gravity[0], 0.0);
}

TEST(ManipulatorTerms, CoriolisVanishesAtRest) {
  const ModelSpec m = ModelSpec::planar_arm(2);
  const auto t = manipulator_terms(m, make_state({0.3, -1.1, 0.0, 0.0}));
  EXPECT_EQ(t.coriolis.norm(), 0.0);
}

TEST(ManipulatorTerms, MatchesTextbookTwoLinkEquations) {
  ModelSpec m = ModelSpec::planar_arm(2);
  m.links[0] = {1.3, 0.9, 0.35, 0.11};
  m.links[1] = {0.7, 1.1, 0.6, 0.05};
  for (const auto& x : {make_state({0.4, -0.8, 1.2, -0.3}), make_state({-1.5, 2.1, -0.7, 2.5}),
                        make_state({2.9, 0.1, 0.0, 1.0})}) {
    const auto t = manipulator_terms(m, x);
    const TwoLink ref = two_link_reference(m, x[0], x[1], x[2], x[3]);
    EXPECT_LT((t.mass - ref.M).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((t.coriolis - ref.c).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((t.gravity - ref.g).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ManipulatorTerms, MassMatrixSymmetricPositiveDefinite) {
  std::mt19937_64 rng(1);
  for (int dof : {2, 3}) {
    const ModelSpec m = ModelSpec::planar_arm(dof);
    for (int trial = 0; trial < 10000; ++trial) {
      const auto t = manipulator_terms(m, random_state(dof, rng));
      ASSERT_LT((t.mass - t.mass.transpose()).cwiseAbs().maxCoeff(), 1e-14);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(t.mass));
      ASSERT_GT(eig.eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(ManipulatorTerms, RejectsNonFiniteState) {
  const ModelSpec m = ModelSpec::planar_arm(2);
  EXPECT_THROW(manipulator_terms(m, make_state({0.0, std::nan(""), 0.0, 0.0})), DomainError);
}

TEST(ModelSpec, ValidatesParameters) {
  ModelSpec m = ModelSpec::planar_arm(2);
  m.links[1].mass = 0.0;
  EXPECT_THROW(m.validate(), DomainError);
  m = ModelSpec::planar_arm(2);
  m.links[0].inertia = -1.0;
  EXPECT_THROW(m.validate(), DomainError);
  EXPECT_THROW(ModelSpec::planar_arm(4).validate(), DomainError);
  m = ModelSpec::planar_arm(3);
  m.damping = -0.1;
  EXPECT_THROW(m.validate(), DomainError);
  EXPECT_NO_THROW(ModelSpec::planar_arm(3).validate());
}

TEST(ForwardDynamics, DoubleIntegrator) {
  const ModelSpec m = ModelSpec::double_integrator();
  EXPECT_EQ(forward_dynamics(m, make_state({0.5, 1.0}), make_control({2.0}))[0], 2.0);
  const StateVec dx = vector_field(m, make_state({1.0, 3.0}), make_control({-1.0}));
  EXPECT_EQ(dx[0], 3.0);
  EXPECT_EQ(dx[1], -1.0);
}

TEST(ForwardDynamics, StaticPointOfEveryModel) {
  for (int dof : {1, 2, 3}) {
    const ModelSpec m = dof == 1 ? ModelSpec::double_integrator() : ModelSpec::planar_arm(dof);
    DofVec q_f(dof);
    for (int i = 0; i < dof; ++i) q_f[i] = 0.5 - 0.3 * i;
    const CostSpec c = make_cost(m, q_f, 100.0, 0.025, 0.005, 2.5e5);
    EXPECT_LE(vector_field(m, c.x_f, c.u_f).norm(), 1e-12) << "dof " << dof;
  }
}

TEST(ForwardDynamics, SatisfiesManipulatorEquation) {
  std::mt19937_64 rng(2);
  for (int dof : {2, 3}) {
    ModelSpec m = ModelSpec::planar_arm(dof);
    m.damping = 0.2;
    for (int trial = 0; trial < 200; ++trial) {
      const StateVec x = random_state(dof, rng, 3.0);
      const ControlVec u = random_control(dof, rng);
      const DofVec a = forward_dynamics(m, x, u);
      const auto t = manipulator_terms(m, x);
      const DofVec residual = t.mass * a + t.coriolis + t.gravity + m.damping * x.tail(dof) - u;
      ASSERT_LE(residual.norm(), 1e-10 * std::max(1.0, u.norm()));
    }
  }
}

TEST(ForwardDynamics, AgreesWithLagrangianOracle) {
  std::mt19937_64 rng(3);
  for (int dof : {2, 3}) {
    const ModelSpec m = ModelSpec::planar_arm(dof);
    for (int trial = 0; trial < 50; ++trial) {
      const StateVec x = random_state(dof, rng, 2.0);
      const ControlVec u = random_control(dof, rng);
      const DofVec a = forward_dynamics(m, x, u);
      const Eigen::VectorXd tau =
          lagrange_torque(m, x.head(dof), x.tail(dof), Eigen::VectorXd(a));
      ASSERT_LE((tau - Eigen::VectorXd(u)).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, u.norm()));
    }
  }
}

TEST(VectorField, PositionRowsEchoVelocity) {
  std::mt19937_64 rng(4);
  const ModelSpec m = ModelSpec::planar_arm(2);
  const StateVec x = random_state(2, rng);
  const StateVec dx = vector_field(m, x, random_control(2, rng));
  EXPECT_EQ(dx[0], x[2]);
  EXPECT_EQ(dx[1], x[3]);
}

TEST(Linearize, DoubleIntegratorExact) {
  const ModelSpec m = ModelSpec::double_integrator();
  const auto lin = linearize(m, make_state({0.3, -0.2}), make_control({0.7}));
  Eigen::Matrix2d A;
  A << 0, 1, 0, 0;
  EXPECT_LT((lin.A - A).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(lin.B(0, 0), 0.0, 1e-8);
  EXPECT_NEAR(lin.B(1, 0), 1.0, 1e-8);
}

TEST(Linearize, ArmIdentityBlockAtEquilibrium) {
  const ModelSpec m = ModelSpec::planar_arm(2);
  DofVec q_f(2);
  q_f << 0.5, 0.5;
  const CostSpec c = make_cost(m, q_f, 100, 0.025, 0.005, 2.5e5);
  const auto lin = linearize(m, c.x_f, c.u_f);
  EXPECT_LT((lin.A.topRightCorner(2, 2) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(lin.A.topLeftCorner(2, 2).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Linearize, AgreesWithFourPointStencil) {
  std::mt19937_64 rng(5);
  const ModelSpec m = ModelSpec::planar_arm(2);
  for (int trial = 0; trial < 100; ++trial) {
    const StateVec x = random_state(2, rng);
    const ControlVec u = random_control(2, rng);
    const auto lin = linearize(m, x, u);
    const double h = 1e-3;
    auto stencil = [&](auto shift) {
      return (-shift(2 * h) + 8.0 * shift(h) - 8.0 * shift(-h) + shift(-2 * h)) / (12 * h);
    };
    for (int i = 0; i < 4; ++i) {
      const StateVec col = stencil([&](double d) {
        StateVec xx = x;
        xx[i] += d;
        return StateVec(vector_field(m, xx, u));
      });
      const double scale = std::max(1.0, col.norm());
      ASSERT_LE((lin.A.col(i) - col).norm() / scale, 1e-6) << "A column " << i;
    }
    for (int i = 0; i < 2; ++i) {
      const StateVec col = stencil([&](double d) {
        ControlVec uu = u;
        uu[i] += d;
        return StateVec(vector_field(m, x, uu));
      });
      ASSERT_LE((lin.B.col(i) - col).norm() / std::max(1.0, col.norm()), 1e-6) << "B column " << i;
    }
  }
}

TEST(RunningCost, Examples) {
  const ModelSpec di = ModelSpec::double_integrator();
  const CostSpec c = make_cost(di, DofVec::Zero(1), 100.0, 0.025, 0.005, 2.5e5);
  EXPECT_DOUBLE_EQ(running_cost(c, di, c.x_f, c.u_f), 100.0);
  EXPECT_DOUBLE_EQ(running_cost(c, di, make_state({0.3, 0.1}), make_control({1.0})), 100.03);
}

TEST(RunningCost, BoundedBelowByTimeWeight) {
  std::mt19937_64 rng(6);
  const ModelSpec m = ModelSpec::planar_arm(2);
  DofVec q_f(2);
  q_f << 0.5, 0.5;
  const CostSpec c = make_cost(m, q_f, 100, 0.025, 0.005, 2.5e5);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_GT(running_cost(c, m, random_state(2, rng), random_control(2, rng)), c.r_t);
  }
  EXPECT_DOUBLE_EQ(running_cost(c, m, c.x_f, c.u_f), c.r_t);
}

TEST(TerminalCost, Examples) {
  const ModelSpec m = ModelSpec::planar_arm(2);
  DofVec q_f(2);
  q_f << 0.5, 0.5;
  const CostSpec c = make_cost(m, q_f, 100, 0.025, 0.005, 2.5e5);
  EXPECT_EQ(terminal_cost(c, c.x_f), 0.0);
  StateVec d = StateVec::Zero(4);
  d[1] = 0.001;
  EXPECT_NEAR(terminal_cost(c, c.x_f + d), 0.25, 1e-12);
  d << 0.1, -0.2, 0.3, 0.05;
  EXPECT_NEAR(terminal_cost(c, c.x_f + d), terminal_cost(c, c.x_f - d), 1e-9);
}

TEST(CostSpec, RejectsInvalidTerminalPoint) {
  const ModelSpec m = ModelSpec::planar_arm(2);
  DofVec q_f(2);
  q_f << 0.5, 0.5;
  CostSpec c = make_cost(m, q_f, 100, 0.025, 0.005, 2.5e5);
  CostSpec moving = c;
  moving.x_f[2] = 0.1;
  EXPECT_THROW(moving.validate(m), DomainError);
  CostSpec wrong_u = c;
  wrong_u.u_f[0] += 1.0;
  EXPECT_THROW(wrong_u.validate(m), DomainError);
  CostSpec bad_weight = c;
  bad_weight.r_u = 0.0;
  EXPECT_THROW(bad_weight.validate(m), DomainError);
}

TEST(CostQuadratics, StationaryAtEquilibrium) {
  const ModelSpec m = ModelSpec::planar_arm(2);
  DofVec q_f(2);
  q_f << 0.5, 0.5;
  const CostSpec c = make_cost(m, q_f, 100, 0.025, 0.005, 2.5e5);
  const auto q = cost_quadratics(c, m, c.x_f, c.u_f);
  EXPECT_LT(q.Lx.norm(), 1e-6);
  EXPECT_LT(q.Lu.norm(), 1e-6);
  EXPECT_DOUBLE_EQ(q.L, c.r_t);
}

TEST(CostQuadratics, DoubleIntegratorCurvature) {
  const ModelSpec m = ModelSpec::double_integrator();
  const CostSpec c = make_cost(m, DofVec::Zero(1), 100, 0.025, 0.005, 2.5e5);
  for (double u : {-3.0, 0.0, 5.0}) {
    const auto q = cost_quadratics(c, m, make_state({0.4, -1.0}), make_control({u}));
    EXPECT_NEAR(q.Luu(0, 0), 2 * (c.r_u + c.r_a), 1e-9);
  }
}

TEST(CostQuadratics, GradientsMatchFourPointStencil) {
  std::mt19937_64 rng(7);
  const ModelSpec m = ModelSpec::planar_arm(2);
  DofVec q_f(2);
  q_f << 0.5, 0.5;
  const CostSpec c = make_cost(m, q_f, 100, 0.025, 0.005, 2.5e5);
  const double h = 1e-3;
  for (int trial = 0; trial < 50; ++trial) {
    const StateVec x = random_state(2, rng);
    const ControlVec u = random_control(2, rng);
    const auto q = cost_quadratics(c, m, x, u);
    for (int i = 0; i < 6; ++i) {
      auto L = [&](double d) {
        StateVec xx = x;
        ControlVec uu = u;
        if (i < 4) xx[i] += d; else uu[i - 4] += d;
        return running_cost(c, m, xx, uu);
      };
      const double fd = (-L(2 * h) + 8 * L(h) - 8 * L(-h) + L(-2 * h)) / (12 * h);
      const double an = i < 4 ? q.Lx[i] : q.Lu[i - 4];
      ASSERT_LE(std::abs(an - fd) / std::max(1.0, std::abs(fd)), 1e-5) << "coordinate " << i;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(q.Luu));
    ASSERT_GE(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Rk4, EnergyConservedWithoutTorqueOrDamping) {
  ModelSpec m = ModelSpec::planar_arm(2);
  m.gravity = 9.81;
  StateVec x = make_state({0.4, -0.7, 1.0, -0.5});
  const ControlVec u = ControlVec::Zero(2);
  const double e0 = mechanical_energy(m, x);
  double drift = 0.0;
  for (int k = 0; k < 10000; ++k) {
    x = rk4_step(m, x, u, 1e-4);
    drift = std::max(drift, std::abs(mechanical_energy(m, x) - e0));
  }
  EXPECT_LT(drift / std::abs(e0), 1e-5);
}

TEST(Rk4, FourthOrderConvergence) {
  const ModelSpec m = ModelSpec::planar_arm(2);
  const StateVec x0 = make_state({0.2, 0.9, 0.5, -0.3});
  const ControlVec u = make_control({3.0, -1.0});
  auto integrate = [&](double dt) {
    StateVec x = x0;
    const int n = static_cast<int>(std::lround(0.5 / dt));
    for (int k = 0; k < n; ++k) x = rk4_step(m, x, u, dt);
    return x;
  };
  const StateVec ref = integrate(1e-4);
  const double e1 = (integrate(0.02) - ref).norm();
  const double e2 = (integrate(0.01) - ref).norm();
  EXPECT_GE(e1 / e2, 8.0);
}

}  // namespace
}  // namespace ftoc
