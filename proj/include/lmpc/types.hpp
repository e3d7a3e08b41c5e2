/*
 Copyright 2026 The lmpc-cert Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef LMPC_TYPES_HPP
#define LMPC_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace lmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Trajectory = std::vector<Vec>;

// Error hierarchy. Solver outcomes that are part of normal control flow
// (infeasible QP, non-member point) are reported through status values;
// exceptions are reserved for contract violations and failed procedures.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A set that must be nonempty turned out to be empty.
struct EmptySetError : Error {
  using Error::Error;
};

/// An LP/support query is unbounded in the requested direction.
struct UnboundedError : Error {
  using Error::Error;
};

/// Row explosion or iteration cap exceeded in a set computation.
struct ResourceError : Error {
  using Error::Error;
};

/// A fixed-point or series iteration did not converge.
struct DivergenceError : Error {
  using Error::Error;
};

/// An optimization problem that must be feasible was not.
struct InfeasibleError : Error {
  using Error::Error;
};

/// A runtime check of a closed-loop guarantee failed (recursive
/// feasibility, monotone cost, fixed-point consistency).
struct InvariantViolation : Error {
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline std::string dims(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail

}  // namespace lmpc

#endif  // LMPC_TYPES_HPP
