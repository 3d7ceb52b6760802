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

#ifndef MPC_OPTIM_HPP_
#define MPC_OPTIM_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpc/parameters.hpp"

namespace mpc {

// Warmup schedule
//   lr(n) = k * d_model^e * min(n^-0.5, n * warmup_n^-1.5)
// The exponent e defaults to +0.5; the classic Transformer schedule uses -0.5.
struct ScheduleConfig {
  double k = 0.5;
  int d_model = 256;
  std::int64_t warmup_n = 8000;
  double d_model_exponent = 0.5;

  void Validate() const;
};

double LrAtStep(const ScheduleConfig& cfg, std::int64_t step);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t t = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// One bias-corrected Adam update of every parameter in `params` from its
// accumulated gradient. Throws naming the first parameter without a gradient.
void AdamStep(ParameterSet& params, AdamState& state, double lr);

}  // namespace mpc

#endif  // MPC_OPTIM_HPP_
