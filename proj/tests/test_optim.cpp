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

#include <cmath>

#include "doctest.h"
#include "mpc/error.hpp"
#include "mpc/optim.hpp"

namespace mpc {
namespace {

ScheduleConfig FullScaleSchedule() { return {0.5, 256, 8000, 0.5}; }

TEST_CASE("schedule: values at the warmup peak and first step") {
  // 0.5 * 256^0.5 * 8000^-0.5 and 0.5 * 16 * 1 * 8000^-1.5, evaluated in
  // extended precision.
  CHECK(LrAtStep(FullScaleSchedule(), 8000) == doctest::Approx(0.08944271909999159).epsilon(1e-12));
  CHECK(LrAtStep(FullScaleSchedule(), 1) == doctest::Approx(1.1180339887498949e-05).epsilon(1e-12));
}

TEST_CASE("schedule: peak at warmup and monotone on both sides") {
  for (const ScheduleConfig& cfg :
       {FullScaleSchedule(), ScheduleConfig{0.3, 256, 8000, 0.5},
        ScheduleConfig{2.5, 256, 25000, 0.5}, ScheduleConfig{1.0, 64, 37, -0.5}}) {
    const double peak = LrAtStep(cfg, cfg.warmup_n);
    double prev = 0.0;
    for (std::int64_t n = 1; n <= cfg.warmup_n; ++n) {
      const double lr = LrAtStep(cfg, n);
      CHECK(lr > prev);
      CHECK(lr <= peak);
      prev = lr;
    }
    for (std::int64_t n = cfg.warmup_n + 1; n <= 4 * cfg.warmup_n; ++n) {
      const double lr = LrAtStep(cfg, n);
      CHECK(lr < prev);
      prev = lr;
    }
  }
}

TEST_CASE("schedule: invalid inputs") {
  CHECK_THROWS_AS(LrAtStep(FullScaleSchedule(), 0), Error);
  CHECK_THROWS_AS(LrAtStep(ScheduleConfig{0.0, 256, 8000, 0.5}, 1), ConfigError);
  CHECK_THROWS_AS(LrAtStep(ScheduleConfig{0.5, 256, 0, 0.5}, 1), ConfigError);
}

TEST_CASE("schedule: conventional exponent is configurable") {
  const ScheduleConfig cfg{0.5, 256, 8000, -0.5};
  CHECK(LrAtStep(cfg, 8000) == doctest::Approx(0.5 / 16.0 / std::sqrt(8000.0)));
}

ParameterSet TwoParams(double g1, double g2) {
  ParameterSet p;
  p.Add("a", Tensor::FromData({2}, {1.0, -1.0}));
  p.Add("b", Tensor::FromData({2}, {1.0, -1.0}));
  internal::GradBuffer(*p.Get("a").storage()).assign({g1, g1});
  internal::GradBuffer(*p.Get("b").storage()).assign({g2, g2});
  return p;
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParameterSet p = TwoParams(0.0, 0.0);
  AdamState s;
  AdamStep(p, s, 0.01);
  CHECK(s.t == 1);
  CHECK(p.Get("a").at(0) == 1.0);
  CHECK(p.Get("b").at(1) == -1.0);
}

TEST_CASE("adam: first step moves by lr against the gradient sign") {
  ParameterSet p = TwoParams(0.37, -4.0);
  AdamState s;
  s.epsilon = 0.0;
  AdamStep(p, s, 0.01);
  CHECK(p.Get("a").at(0) == doctest::Approx(1.0 - 0.01).epsilon(1e-12));
  CHECK(p.Get("b").at(0) == doctest::Approx(1.0 + 0.01).epsilon(1e-12));
}

TEST_CASE("adam: identical gradients give identical updates") {
  ParameterSet p = TwoParams(0.25, 0.25);
  AdamState s;
  for (int i = 0; i < 3; ++i) AdamStep(p, s, 0.05);
  CHECK(p.Get("a").at(0) == p.Get("b").at(0));
  CHECK(p.Get("a").at(1) == p.Get("b").at(1));
  CHECK(s.t == 3);
  for (double v : s.v["a"]) CHECK(v >= 0.0);
}

TEST_CASE("adam: missing gradient names the parameter") {
  ParameterSet p;
  p.Add("frontend.conv1.weight", Tensor::Zeros({2}));
  AdamState s;
  try {
    AdamStep(p, s, 0.01);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("frontend.conv1.weight") != std::string::npos);
  }
  CHECK(s.t == 0);
}

}  // namespace
}  // namespace mpc
