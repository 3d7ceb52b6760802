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

#include "mpc/optim.hpp"

#include <algorithm>
#include <cmath>

#include "mpc/error.hpp"

namespace mpc {

using internal::StrCat;

void ScheduleConfig::Validate() const {
  if (!(k > 0.0)) throw ConfigError(StrCat("schedule: k must be > 0, got ", k));
  if (warmup_n < 1) {
    throw ConfigError(StrCat("schedule: warmup_n must be >= 1, got ", warmup_n));
  }
  if (d_model < 1) {
    throw ConfigError(StrCat("schedule: d_model must be >= 1, got ", d_model));
  }
}

double LrAtStep(const ScheduleConfig& cfg, std::int64_t step) {
  cfg.Validate();
  if (step < 1) {
    throw Error(StrCat("lr_at_step: step must be >= 1, got ", step));
  }
  const double n = static_cast<double>(step);
  const double w = static_cast<double>(cfg.warmup_n);
  const double decay = 1.0 / std::sqrt(n);
  const double rise = n / (w * std::sqrt(w));
  return cfg.k * std::pow(static_cast<double>(cfg.d_model), cfg.d_model_exponent) *
         std::min(decay, rise);
}

void AdamStep(ParameterSet& params, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw Error(StrCat("adam: learning rate must be > 0, got ", lr));
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) {
      throw Error(StrCat("adam: parameter '", name, "' has no gradient"));
    }
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (auto& [name, p] : params) {
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(p.numel(), 0.0);
      v.assign(p.numel(), 0.0);
    }
    const auto g = p.grad();
    auto w = p.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace mpc
