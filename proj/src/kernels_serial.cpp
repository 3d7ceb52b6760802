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

// Straightforward loop nests. Kept as the reference the parallel kernels are
// tested against; not used on the hot path.

#include <cmath>
#include <limits>

#include "mpc/kernels.hpp"

namespace mpc::kernels::serial {

void Gemm(const GemmShape& s, const double* a, const double* b, double* c) {
  for (std::size_t bi = 0; bi < s.batch; ++bi) {
    const double* ab = a + bi * s.stride_a;
    const double* bb = b + bi * s.stride_b;
    double* cb = c + bi * s.stride_c;
    for (std::size_t i = 0; i < s.m; ++i) {
      double* crow = cb + i * s.n;
      for (std::size_t j = 0; j < s.n; ++j) crow[j] = 0.0;
      for (std::size_t kk = 0; kk < s.k; ++kk) {
        const double av = s.trans_a ? ab[kk * s.m + i] : ab[i * s.k + kk];
        for (std::size_t j = 0; j < s.n; ++j) {
          const double bv = s.trans_b ? bb[j * s.k + kk] : bb[kk * s.n + j];
          crow[j] += av * bv;
        }
      }
    }
  }
}

std::size_t Softmax(const SoftmaxShape& s, const double* x, double* y) {
  std::size_t degenerate = 0;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = neg_inf;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double v = x[base + j * s.inner];
        if (v > mx) mx = v;
      }
      if (mx == neg_inf) {
        ++degenerate;
        for (std::size_t j = 0; j < s.n; ++j) y[base + j * s.inner] = 0.0;
        continue;
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double e = std::exp(x[base + j * s.inner] - mx);
        y[base + j * s.inner] = e;
        sum += e;
      }
      for (std::size_t j = 0; j < s.n; ++j) y[base + j * s.inner] /= sum;
    }
  }
  return degenerate;
}

void SoftmaxBackward(const SoftmaxShape& s, const double* y, const double* dy,
                     double* dx) {
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double dot = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t p = base + j * s.inner;
        dot += y[p] * dy[p];
      }
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t p = base + j * s.inner;
        dx[p] = y[p] * (dy[p] - dot);
      }
    }
  }
}

void LayerNorm(std::size_t rows, std::size_t cols, const double* x,
               const double* gamma, const double* beta, double eps, double* y,
               double* mean, double* rstd) {
  const double inv_n = 1.0 / static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double* yr = y + r * cols;
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sum += xr[j];
    const double mu = sum * inv_n;
    double sq = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = xr[j] - mu;
      sq += d * d;
    }
    const double rs = 1.0 / std::sqrt(sq * inv_n + eps);
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
    }
    mean[r] = mu;
    rstd[r] = rs;
  }
}

void LayerNormBackward(std::size_t rows, std::size_t cols, const double* x,
                       const double* gamma, const double* mean,
                       const double* rstd, const double* dy, double* dx,
                       double* dgamma, double* dbeta) {
  const double inv_n = 1.0 / static_cast<double>(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    dgamma[j] = 0.0;
    dbeta[j] = 0.0;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    const double* dyr = dy + r * cols;
    double* dxr = dx + r * cols;
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double xhat = (xr[j] - mean[r]) * rstd[r];
      const double g = dyr[j] * gamma[j];
      s1 += g;
      s2 += g * xhat;
      dgamma[j] += dyr[j] * xhat;
      dbeta[j] += dyr[j];
    }
    for (std::size_t j = 0; j < cols; ++j) {
      const double xhat = (xr[j] - mean[r]) * rstd[r];
      const double g = dyr[j] * gamma[j];
      dxr[j] = rstd[r] * (g - s1 * inv_n - xhat * (s2 * inv_n));
    }
  }
}

}  // namespace mpc::kernels::serial
