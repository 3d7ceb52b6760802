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

#include "mpc/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpc/error.hpp"

namespace mpc {

namespace {

double EvaluateScalar(const std::function<Tensor()>& f) {
  const Tensor y = f();
  if (y.numel() != 1) {
    throw ShapeError("grad_check: function must return a scalar");
  }
  return y.item();
}

}  // namespace

GradCheckReport GradCheck(const std::function<Tensor(const Tensor&)>& f,
                          const Tensor& point, double tolerance, double step) {
  Tensor x = point.Clone();
  GradCheckOptions opt;
  opt.tolerance = tolerance;
  opt.step = step;
  return GradCheckLeaves([&] { return f(x); }, {x}, opt);
}

GradCheckReport GradCheckLeaves(const std::function<Tensor()>& f,
                                std::vector<Tensor> leaves,
                                const GradCheckOptions& options) {
  std::vector<bool> previous_flags;
  for (Tensor& t : leaves) {
    previous_flags.push_back(t.requires_grad());
    t.set_requires_grad(true);
    t.clear_grad();
  }

  Tape tape;
  double y0 = 0.0;
  {
    TapeScope scope(tape);
    const Tensor y = f();
    if (y.numel() != 1) {
      throw ShapeError("grad_check: function must return a scalar");
    }
    y0 = y.item();
    if (!std::isfinite(y0)) {
      throw Error("grad_check: function is not finite at the check point");
    }
    Backward(tape, y);
  }

  GradCheckReport report;
  Rng rng(options.seed);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor& t = leaves[li];
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) {
      std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    }
    std::vector<std::size_t> coords(t.numel());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_tensor != 0 &&
        coords.size() > options.max_coords_per_tensor) {
      for (std::size_t i = 0; i < options.max_coords_per_tensor; ++i) {
        const std::size_t j = i + rng.UniformInt(coords.size() - i);
        std::swap(coords[i], coords[j]);
      }
      coords.resize(options.max_coords_per_tensor);
    }
    auto data = t.mutable_data();
    for (std::size_t c : coords) {
      const double saved = data[c];
      data[c] = saved + options.step;
      const double plus = EvaluateScalar(f);
      data[c] = saved - options.step;
      const double minus = EvaluateScalar(f);
      data[c] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double abs_err = std::fabs(analytic[c] - numeric);
      const double denom = std::max(
          {std::fabs(analytic[c]), std::fabs(numeric), kGradCheckFloor});
      const double rel = abs_err / denom;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error || report.coordinates == 0) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        report.worst = internal::StrCat(li, "[", c, "]");
      }
      ++report.coordinates;
    }
    t.clear_grad();
    t.set_requires_grad(previous_flags[li]);
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace mpc
