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

#ifndef FTOC_TYPES_HPP_
#define FTOC_TYPES_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Dense>

namespace ftoc {

// Models have at most three joints, so every small vector and matrix has a
// compile-time capacity and never touches the heap.
inline constexpr int kMaxDof = 3;
inline constexpr int kMaxState = 2 * kMaxDof;

template <int MaxRows>
using BoundedVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, MaxRows, 1>;
template <int MaxRows, int MaxCols>
using BoundedMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, MaxRows, MaxCols>;

/// Joint positions stacked over joint velocities, x = (q, v).
using StateVec = BoundedVec<kMaxState>;
/// Joint torques.
using ControlVec = BoundedVec<kMaxDof>;
/// Per-joint quantities (accelerations, gravity torques, ...).
using DofVec = BoundedVec<kMaxDof>;

using DofMat = BoundedMat<kMaxDof, kMaxDof>;          // dof x dof
using StateMat = BoundedMat<kMaxState, kMaxState>;    // n x n
using InputMat = BoundedMat<kMaxState, kMaxDof>;      // n x m
using GainMat = BoundedMat<kMaxDof, kMaxState>;       // m x n
using ControlMat = BoundedMat<kMaxDof, kMaxDof>;      // m x m

/// Invalid input values (non-finite states, bad model parameters).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A linear-algebra step failed (singular or indefinite matrix).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace ftoc

#endif  // FTOC_TYPES_HPP_
