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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "mpc/kernels.hpp"

namespace mpc::kernels::omp {

namespace {

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kTileCols = 16;

// One R x cols tile of C held in registers across the whole k loop. Each C
// element is accumulated over kk in ascending order, same as the serial
// reference.
template <std::size_t R, bool kFull>
void GemmTile(const GemmShape& s, const double* ab, const double* bp,
              double* cb, std::size_t i0, std::size_t j0, std::size_t cols) {
  double acc[R][kTileCols] = {};
  const std::size_t width = kFull ? kTileCols : cols;
  for (std::size_t kk = 0; kk < s.k; ++kk) {
    const double* __restrict__ brow = bp + kk * s.n + j0;
    for (std::size_t r = 0; r < R; ++r) {
      const double av = s.trans_a ? ab[kk * s.m + i0 + r] : ab[(i0 + r) * s.k + kk];
      for (std::size_t j = 0; j < width; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    double* crow = cb + (i0 + r) * s.n + j0;
    for (std::size_t j = 0; j < width; ++j) crow[j] = acc[r][j];
  }
}

template <std::size_t R>
void GemmRowsFixed(const GemmShape& s, const double* ab, const double* bp,
                   double* cb, std::size_t i0) {
  std::size_t j0 = 0;
  for (; j0 + kTileCols <= s.n; j0 += kTileCols) {
    GemmTile<R, true>(s, ab, bp, cb, i0, j0, kTileCols);
  }
  if (j0 < s.n) GemmTile<R, false>(s, ab, bp, cb, i0, j0, s.n - j0);
}

// Computes rows [i0, i0 + rows) of one batch entry. `bp` is op(B) packed as a
// contiguous k x n matrix.
void GemmRows(const GemmShape& s, const double* ab, const double* bp,
              double* cb, std::size_t i0, std::size_t rows) {
  switch (rows) {
    case 4: GemmRowsFixed<4>(s, ab, bp, cb, i0); break;
    case 3: GemmRowsFixed<3>(s, ab, bp, cb, i0); break;
    case 2: GemmRowsFixed<2>(s, ab, bp, cb, i0); break;
    default: GemmRowsFixed<1>(s, ab, bp, cb, i0); break;
  }
}

double RowMax(const double* x, std::size_t n, std::size_t stride) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    const double v = x[j * stride];
    if (v > mx) mx = v;
  }
  return mx;
}

}  // namespace

int MaxThreads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void Gemm(const GemmShape& s, const double* a, const double* b, double* c) {
  if (s.batch == 0 || s.m == 0 || s.n == 0) return;
  // Pack op(B) into row-major k x n so the inner loop streams contiguously.
  std::vector<double> packed;
  const double* bsrc = b;
  std::size_t bstride = s.stride_b;
  if (s.trans_b) {
    const std::size_t nb = s.stride_b == 0 ? 1 : s.batch;
    packed.resize(nb * s.k * s.n);
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const double* src = b + bi * s.stride_b;
      double* dst = packed.data() + bi * s.k * s.n;
      for (std::size_t j = 0; j < s.n; ++j) {
        for (std::size_t kk = 0; kk < s.k; ++kk) {
          dst[kk * s.n + j] = src[j * s.k + kk];
        }
      }
    }
    bsrc = packed.data();
    bstride = s.stride_b == 0 ? 0 : s.k * s.n;
  }

  const std::size_t blocks_per_batch = (s.m + kRowBlock - 1) / kRowBlock;
  const auto total = static_cast<std::int64_t>(s.batch * blocks_per_batch);
#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < total; ++t) {
    const std::size_t bi = static_cast<std::size_t>(t) / blocks_per_batch;
    const std::size_t blk = static_cast<std::size_t>(t) % blocks_per_batch;
    const std::size_t i0 = blk * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, s.m - i0);
    GemmRows(s, a + bi * s.stride_a, bsrc + bi * bstride, c + bi * s.stride_c,
             i0, rows);
  }
}

std::size_t Softmax(const SoftmaxShape& s, const double* x, double* y) {
  const auto rows = static_cast<std::int64_t>(s.outer * s.inner);
  std::size_t degenerate = 0;
#pragma omp parallel for schedule(static) reduction(+ : degenerate)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t o = static_cast<std::size_t>(r) / s.inner;
    const std::size_t in = static_cast<std::size_t>(r) % s.inner;
    const std::size_t base = o * s.n * s.inner + in;
    const double mx = RowMax(x + base, s.n, s.inner);
    if (mx == -std::numeric_limits<double>::infinity()) {
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
  return degenerate;
}

void SoftmaxBackward(const SoftmaxShape& s, const double* y, const double* dy,
                     double* dx) {
  const auto rows = static_cast<std::int64_t>(s.outer * s.inner);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t o = static_cast<std::size_t>(r) / s.inner;
    const std::size_t in = static_cast<std::size_t>(r) % s.inner;
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

void LayerNorm(std::size_t rows, std::size_t cols, const double* x,
               const double* gamma, const double* beta, double eps, double* y,
               double* mean, double* rstd) {
  const double inv_n = 1.0 / static_cast<double>(cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t ri = 0; ri < static_cast<std::int64_t>(rows); ++ri) {
    const auto r = static_cast<std::size_t>(ri);
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
#pragma omp parallel for schedule(static)
  for (std::int64_t ri = 0; ri < static_cast<std::int64_t>(rows); ++ri) {
    const auto r = static_cast<std::size_t>(ri);
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
    }
    for (std::size_t j = 0; j < cols; ++j) {
      const double xhat = (xr[j] - mean[r]) * rstd[r];
      const double g = dyr[j] * gamma[j];
      dxr[j] = rstd[r] * (g - s1 * inv_n - xhat * (s2 * inv_n));
    }
  }
  // Parameter gradients reduce over rows in order; column blocks are
  // independent.
  constexpr std::size_t kCols = 64;
  const auto blocks = static_cast<std::int64_t>((cols + kCols - 1) / kCols);
#pragma omp parallel for schedule(static)
  for (std::int64_t bi = 0; bi < blocks; ++bi) {
    const std::size_t j0 = static_cast<std::size_t>(bi) * kCols;
    const std::size_t j1 = std::min(cols, j0 + kCols);
    double dg[kCols] = {};
    double db[kCols] = {};
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = x + r * cols;
      const double* dyr = dy + r * cols;
      for (std::size_t j = j0; j < j1; ++j) {
        const double xhat = (xr[j] - mean[r]) * rstd[r];
        dg[j - j0] += dyr[j] * xhat;
        db[j - j0] += dyr[j];
      }
    }
    for (std::size_t j = j0; j < j1; ++j) {
      dgamma[j] = dg[j - j0];
      dbeta[j] = db[j - j0];
    }
  }
}

}  // namespace mpc::kernels::omp
