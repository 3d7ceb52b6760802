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


// Serial reference vs parallel kernels: wall time and result equality.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpc/kernels.hpp"
#include "mpc/rng.hpp"

namespace {

using mpc::kernels::GemmShape;
using mpc::kernels::SoftmaxShape;

std::vector<double> Random(std::size_t n, mpc::Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Uniform(-1.0, 1.0);
  return v;
}

double MedianMs(const std::function<void()>& fn, int reps) {
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void Report(const std::string& name, double serial_ms, double omp_ms, bool equal,
            double flops) {
  std::printf("%-34s serial %9.3f ms  omp %9.3f ms  speedup %5.2fx  %6.2f GFLOP/s  %s\n",
              name.c_str(), serial_ms, omp_ms, serial_ms / omp_ms,
              flops > 0 ? flops / (omp_ms * 1e6) : 0.0,
              equal ? "identical" : "MISMATCH");
}

bool BenchGemm(const GemmShape& s, int reps, mpc::Rng& rng) {
  const std::size_t na = s.stride_a == 0 ? s.m * s.k : s.batch * s.m * s.k;
  const std::size_t nb = s.stride_b == 0 ? s.k * s.n : s.batch * s.k * s.n;
  const auto a = Random(na, rng);
  const auto b = Random(nb, rng);
  std::vector<double> c1(s.batch * s.m * s.n), c2(c1.size());
  const double ts = MedianMs([&] { mpc::kernels::serial::Gemm(s, a.data(), b.data(), c1.data()); }, reps);
  const double to = MedianMs([&] { mpc::kernels::omp::Gemm(s, a.data(), b.data(), c2.data()); }, reps);
  const bool eq = c1 == c2;
  char name[96];
  std::snprintf(name, sizeof(name), "gemm %zux%zux%zux%zu%s%s", s.batch, s.m, s.n, s.k,
                s.trans_a ? " tA" : "", s.trans_b ? " tB" : "");
  Report(name, ts, to, eq, 2.0 * static_cast<double>(s.batch * s.m * s.n * s.k));
  return eq;
}

bool BenchSoftmax(std::size_t rows, std::size_t n, int reps, mpc::Rng& rng) {
  const SoftmaxShape s{rows, n, 1};
  const auto x = Random(rows * n, rng);
  std::vector<double> y1(x.size()), y2(x.size());
  const double ts = MedianMs([&] { mpc::kernels::serial::Softmax(s, x.data(), y1.data()); }, reps);
  const double to = MedianMs([&] { mpc::kernels::omp::Softmax(s, x.data(), y2.data()); }, reps);
  const bool eq = y1 == y2;
  Report("softmax " + std::to_string(rows) + "x" + std::to_string(n), ts, to, eq, 0);
  return eq;
}

bool BenchLayerNorm(std::size_t rows, std::size_t cols, int reps, mpc::Rng& rng) {
  const auto x = Random(rows * cols, rng);
  const auto g = Random(cols, rng);
  const auto b = Random(cols, rng);
  const auto dy = Random(rows * cols, rng);
  std::vector<double> y1(x.size()), y2(x.size()), m1(rows), m2(rows), r1(rows), r2(rows);
  std::vector<double> dx1(x.size()), dx2(x.size()), dg1(cols), dg2(cols), db1(cols), db2(cols);
  const double ts = MedianMs([&] {
    mpc::kernels::serial::LayerNorm(rows, cols, x.data(), g.data(), b.data(), 1e-5,
                                    y1.data(), m1.data(), r1.data());
    mpc::kernels::serial::LayerNormBackward(rows, cols, x.data(), g.data(), m1.data(),
                                            r1.data(), dy.data(), dx1.data(), dg1.data(),
                                            db1.data());
  }, reps);
  const double to = MedianMs([&] {
    mpc::kernels::omp::LayerNorm(rows, cols, x.data(), g.data(), b.data(), 1e-5, y2.data(),
                                 m2.data(), r2.data());
    mpc::kernels::omp::LayerNormBackward(rows, cols, x.data(), g.data(), m2.data(),
                                         r2.data(), dy.data(), dx2.data(), dg2.data(),
                                         db2.data());
  }, reps);
  const bool eq = y1 == y2 && dx1 == dx2 && dg1 == dg2 && db1 == db2;
  Report("layer_norm fwd+bwd " + std::to_string(rows) + "x" + std::to_string(cols), ts, to,
         eq, 0);
  return eq;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  int reps = 7;
  std::uint64_t seed = 1;
  app.add_option("--reps", reps, "Repetitions per measurement")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Input seed");
  CLI11_PARSE(app, argc, argv);

  std::printf("threads: %d\n", mpc::kernels::omp::MaxThreads());
  mpc::Rng rng(seed);
  bool ok = true;
  ok &= BenchGemm({1, 512, 64, 64, false, false, 0, 0, 0}, reps, rng);
  ok &= BenchGemm({1, 512, 256, 64, false, false, 0, 0, 0}, reps, rng);
  ok &= BenchGemm({1, 512, 64, 256, false, false, 0, 0, 0}, reps, rng);
  ok &= BenchGemm({1, 64, 256, 512, true, false, 0, 0, 0}, reps, rng);
  ok &= BenchGemm({1, 512, 64, 64, false, true, 0, 0, 0}, reps, rng);
  ok &= BenchGemm({32, 64, 64, 16, false, true, 64 * 16, 64 * 16, 64 * 64}, reps, rng);
  ok &= BenchGemm({1, 1024, 1024, 1024, false, false, 0, 0, 0}, std::max(1, reps / 3), rng);
  ok &= BenchSoftmax(2048, 64, reps, rng);
  ok &= BenchLayerNorm(4096, 256, reps, rng);
  return ok ? 0 : 1;
}
