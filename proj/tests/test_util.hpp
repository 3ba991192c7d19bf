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


// Small builders shared by the unit tests.

#ifndef FTOC_TESTS_TEST_UTIL_HPP_
#define FTOC_TESTS_TEST_UTIL_HPP_

#include <initializer_list>

#include "ftoc/dynamics.hpp"

namespace ftoc::testing {

inline StateVec state(std::initializer_list<double> values) {
  StateVec x(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) x[i++] = v;
  return x;
}

inline ControlVec control(std::initializer_list<double> values) {
  ControlVec u(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) u[i++] = v;
  return u;
}

/// Default arm weights, q_f = 0 on the double integrator.
inline CostSpec di_cost(double r_f = 2.5e5) {
  return make_cost(ModelSpec::double_integrator(), DofVec::Zero(1), 100.0, 0.025, 0.005, r_f);
}

/// A well-conditioned linear-quadratic instance.
inline CostSpec lq_cost() {
  return make_cost(ModelSpec::double_integrator(), DofVec::Zero(1), 1.0, 0.5, 0.5, 1e3);
}

inline CostSpec arm_cost(const ModelSpec& model) {
  DofVec q_f = DofVec::Constant(model.dof, 0.5);
  return make_cost(model, q_f, 100.0, 0.025, 0.005, 2.5e5);
}

}  // namespace ftoc::testing

#endif  // FTOC_TESTS_TEST_UTIL_HPP_
