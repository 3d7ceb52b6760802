// Copyright 2026 The mpc-audio Authors.
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

// Central finite-difference verification of tape gradients.
//
// The relative error of a coordinate is |analytic - numeric| divided by
// max(|analytic|, |numeric|, kGradCheckFloor); the floor keeps coordinates
// whose true derivative is zero from dividing round-off by round-off.

#ifndef MPC_GRAD_CHECK_HPP_
#define MPC_GRAD_CHECK_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mpc/rng.hpp"
#include "mpc/tensor.hpp"

namespace mpc {

inline constexpr double kGradCheckFloor = 1e-3;

struct GradCheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "<tensor index>[<flat index>]" of the worst entry
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // When nonzero, checks this many randomly chosen coordinates per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

// Checks d f / d point. `f` must return a scalar and must not depend on
// anything that changes between calls.
GradCheckReport GradCheck(const std::function<Tensor(const Tensor&)>& f,
                          const Tensor& point, double tolerance = 1e-4,
                          double step = 1e-5);

// Checks the gradient of `f` with respect to every tensor in `leaves`, which
// `f` reads directly. Leaves are perturbed in place and restored.
GradCheckReport GradCheckLeaves(const std::function<Tensor()>& f,
                                std::vector<Tensor> leaves,
                                const GradCheckOptions& options = {});

}  // namespace mpc

#endif  // MPC_GRAD_CHECK_HPP_
