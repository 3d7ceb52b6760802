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

#include "mpc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mpc/error.hpp"
#include "mpc/kernels.hpp"

namespace mpc {

using internal::GradBuffer;
using internal::MakeResult;
using internal::StrCat;

namespace {

std::size_t NormAxis(const char* op, int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError(StrCat(op, ": axis ", axis, " invalid for rank ", rank));
  }
  return static_cast<std::size_t>(a);
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape BroadcastShapes(const char* op, const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(StrCat(op, ": shapes ", ShapeString(a), " and ",
                              ShapeString(b), " do not broadcast"));
    }
    out[i] = da == 1 ? db : da;
  }
  return out;
}

// For each flat index of `out`, the flat index of the broadcast source `in`.
std::vector<std::size_t> BroadcastIndex(const Shape& in, const Shape& out) {
  const std::size_t n = NumElements(out);
  const std::size_t nin = NumElements(in);
  std::vector<std::size_t> idx(n);
  if (nin == 1) return idx;
  const std::size_t r = out.size();
  const std::size_t off = r - in.size();
  bool suffix = true;
  for (std::size_t i = 0; i < in.size(); ++i) {
    suffix = suffix && in[i] == out[off + i];
  }
  if (suffix) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = i % nin;
    return idx;
  }
  std::vector<std::size_t> in_stride(r, 0);
  std::size_t st = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    in_stride[off + i] = in[i] == 1 ? 0 : st;
    st *= in[i];
  }
  std::vector<std::size_t> counter(r, 0);
  std::size_t src = 0;
  for (std::size_t o = 0; o < n; ++o) {
    idx[o] = src;
    for (std::size_t d = r; d-- > 0;) {
      ++counter[d];
      src += in_stride[d];
      if (counter[d] < out[d]) break;
      src -= in_stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return idx;
}

// Maps output flat indices to flat indices of a broadcast source. Sources
// equal to a trailing block of the output (including scalars and full-size
// sources) repeat with period `period` and need no table.
struct BroadcastMap {
  std::size_t period = 1;
  std::vector<std::size_t> table;  // empty when periodic
};

BroadcastMap MakeBroadcastMap(const Shape& in, const Shape& out) {
  BroadcastMap map;
  map.period = std::max<std::size_t>(NumElements(in), 1);
  const std::size_t off = out.size() - in.size();
  bool suffix = true;
  for (std::size_t i = 0; i < in.size(); ++i) {
    suffix = suffix && in[i] == out[off + i];
  }
  if (!suffix && NumElements(in) != 1) map.table = BroadcastIndex(in, out);
  return map;
}

// Calls f(i, source index) for every output index, in order.
template <typename F>
void ForEachSource(const BroadcastMap& map, std::size_t n, F f) {
  if (!map.table.empty()) {
    for (std::size_t i = 0; i < n; ++i) f(i, map.table[i]);
    return;
  }
  for (std::size_t i0 = 0; i0 < n; i0 += map.period) {
    const std::size_t len = std::min(map.period, n - i0);
    for (std::size_t j = 0; j < len; ++j) f(i0 + j, j);
  }
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor Binary(const char* op, BinaryKind kind, const Tensor& a,
              const Tensor& b) {
  Shape out_shape = BroadcastShapes(op, a.shape(), b.shape());
  const std::size_t n = NumElements(out_shape);
  auto ma = std::make_shared<BroadcastMap>(MakeBroadcastMap(a.shape(), out_shape));
  auto mb = std::make_shared<BroadcastMap>(MakeBroadcastMap(b.shape(), out_shape));
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n);
  // Gather both operands to output layout, then combine elementwise.
  std::vector<double> bx(n);
  ForEachSource(*ma, n, [&](std::size_t i, std::size_t p) { out[i] = ad[p]; });
  ForEachSource(*mb, n, [&](std::size_t i, std::size_t p) { bx[i] = bd[p]; });
  switch (kind) {
    case BinaryKind::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = out[i] + bx[i];
      break;
    case BinaryKind::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = out[i] - bx[i];
      break;
    case BinaryKind::kMul:
      for (std::size_t i = 0; i < n; ++i) out[i] = out[i] * bx[i];
      break;
  }
  return MakeResult(
      op, std::move(out_shape), std::move(out), {a, b},
      [a, b, ma, mb, kind, n](const TensorStorage& o) {
        const auto& g = o.grad;
        if (a.requires_grad()) {
          auto& ga = GradBuffer(*a.storage());
          if (kind == BinaryKind::kMul) {
            std::vector<double> bx(n);
            const auto bd = b.data();
            ForEachSource(*mb, n, [&](std::size_t i, std::size_t p) { bx[i] = bd[p]; });
            ForEachSource(*ma, n, [&](std::size_t i, std::size_t p) {
              ga[p] += g[i] * bx[i];
            });
          } else {
            ForEachSource(*ma, n, [&](std::size_t i, std::size_t p) { ga[p] += g[i]; });
          }
        }
        if (b.requires_grad()) {
          auto& gb = GradBuffer(*b.storage());
          if (kind == BinaryKind::kMul) {
            std::vector<double> ax(n);
            const auto ad = a.data();
            ForEachSource(*ma, n, [&](std::size_t i, std::size_t p) { ax[i] = ad[p]; });
            ForEachSource(*mb, n, [&](std::size_t i, std::size_t p) {
              gb[p] += g[i] * ax[i];
            });
          } else if (kind == BinaryKind::kAdd) {
            ForEachSource(*mb, n, [&](std::size_t i, std::size_t p) { gb[p] += g[i]; });
          } else {
            ForEachSource(*mb, n, [&](std::size_t i, std::size_t p) { gb[p] -= g[i]; });
          }
        }
      });
}

void AddInto(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Source flat index for each output element of a permutation.
std::vector<std::size_t> PermuteIndex(const Shape& in,
                                      const std::vector<std::size_t>& perm,
                                      Shape* out_shape) {
  const std::size_t r = in.size();
  std::vector<std::size_t> in_stride(r);
  std::size_t st = 1;
  for (std::size_t i = r; i-- > 0;) {
    in_stride[i] = st;
    st *= in[i];
  }
  Shape out(r);
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out[i] = in[perm[i]];
    stride[i] = in_stride[perm[i]];
  }
  const std::size_t n = NumElements(in);
  std::vector<std::size_t> idx(n);
  std::vector<std::size_t> counter(r, 0);
  std::size_t src = 0;
  for (std::size_t o = 0; o < n; ++o) {
    idx[o] = src;
    for (std::size_t d = r; d-- > 0;) {
      ++counter[d];
      src += stride[d];
      if (counter[d] < out[d]) break;
      src -= stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  *out_shape = std::move(out);
  return idx;
}

template <typename Fwd, typename Deriv>
Tensor Unary(const char* op, const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = fwd(xd[i]);
  return MakeResult(op, x.shape(), std::move(out), {x},
                    [x, deriv](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      auto& gx = GradBuffer(*x.storage());
                      const auto xd = x.data();
                      for (std::size_t i = 0; i < gx.size(); ++i) {
                        gx[i] += o.grad[i] * deriv(xd[i], o.data[i]);
                      }
                    });
}

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError(StrCat("matmul: operands need rank >= 2, got ",
                            ShapeString(a.shape()), " and ",
                            ShapeString(b.shape())));
  }
  const std::size_t m = a.dim(-2);
  const std::size_t k = a.dim(-1);
  const std::size_t kb = transpose_b ? b.dim(-1) : b.dim(-2);
  const std::size_t n = transpose_b ? b.dim(-2) : b.dim(-1);
  const bool shared = b.rank() == 2;
  bool ok = kb == k;
  if (!shared) {
    ok = ok && b.rank() == a.rank() &&
         std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin());
  }
  if (!ok) {
    throw ShapeError(StrCat("matmul: incompatible shapes ",
                            ShapeString(a.shape()), " x ",
                            ShapeString(b.shape()),
                            transpose_b ? " (b transposed)" : ""));
  }
  const std::size_t batch = a.numel() / std::max<std::size_t>(m * k, 1);
  Shape out_shape = a.shape();
  out_shape.back() = n;

  kernels::GemmShape fwd;
  if (shared) {
    fwd = {1, batch * m, n, k, false, transpose_b, 0, 0, 0};
  } else {
    fwd = {batch, m, n, k, false, transpose_b, m * k, k * n, m * n};
  }
  std::vector<double> out(batch * m * n);
  if (k == 0) {
    std::fill(out.begin(), out.end(), 0.0);
  } else {
    kernels::Gemm(fwd, a.data().data(), b.data().data(), out.data());
  }
  return MakeResult(
      "matmul", std::move(out_shape), std::move(out), {a, b},
      [a, b, m, n, k, batch, shared, transpose_b](const TensorStorage& o) {
        const double* g = o.grad.data();
        const std::size_t rows = shared ? batch * m : m;
        const std::size_t nb = shared ? 1 : batch;
        if (a.requires_grad()) {
          // dA = dC * op(B)^T
          kernels::GemmShape s{nb,  rows, k, n, false, !transpose_b,
                               rows * n, shared ? 0 : k * n, rows * k};
          std::vector<double> tmp(a.numel());
          kernels::Gemm(s, g, b.data().data(), tmp.data());
          AddInto(GradBuffer(*a.storage()), tmp);
        }
        if (b.requires_grad()) {
          std::vector<double> tmp(b.numel());
          if (shared && !transpose_b) {
            // dB = A^T * dC over all rows
            kernels::GemmShape s{1, k, n, rows, true, false, 0, 0, 0};
            kernels::Gemm(s, a.data().data(), g, tmp.data());
          } else if (shared) {
            // dB = dC^T * A
            kernels::GemmShape s{1, n, k, rows, true, false, 0, 0, 0};
            kernels::Gemm(s, g, a.data().data(), tmp.data());
          } else if (!transpose_b) {
            kernels::GemmShape s{batch, k, n, m, true, false,
                                 m * k, m * n, k * n};
            kernels::Gemm(s, a.data().data(), g, tmp.data());
          } else {
            kernels::GemmShape s{batch, n, k, m, true, false,
                                 m * n, m * k, k * n};
            kernels::Gemm(s, g, a.data().data(), tmp.data());
          }
          AddInto(GradBuffer(*b.storage()), tmp);
        }
      });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  return Binary("add", BinaryKind::kAdd, a, b);
}
Tensor Sub(const Tensor& a, const Tensor& b) {
  return Binary("sub", BinaryKind::kSub, a, b);
}
Tensor Mul(const Tensor& a, const Tensor& b) {
  return Binary("mul", BinaryKind::kMul, a, b);
}

Tensor Scale(const Tensor& x, double factor) {
  return Unary(
      "scale", x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor Exp(const Tensor& x) {
  return Unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor Log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) {
      throw Error(StrCat("log: non-positive input ", v));
    }
  }
  return Unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor Relu(const Tensor& x) {
  return Unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor Abs(const Tensor& x) {
  return Unary(
      "abs", x, [](double v) { return std::fabs(v); },
      [](double v, double) {
        return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      });
}

Tensor Reshape(const Tensor& x, Shape shape) {
  if (NumElements(shape) != x.numel()) {
    throw ShapeError(StrCat("reshape: cannot view ", ShapeString(x.shape()),
                            " as ", ShapeString(shape)));
  }
  std::vector<double> data(x.data().begin(), x.data().end());
  return MakeResult("reshape", std::move(shape), std::move(data), {x},
                    [x](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      AddInto(GradBuffer(*x.storage()), o.grad);
                    });
}

Tensor Permute(const Tensor& x, const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> check(perm);
  std::sort(check.begin(), check.end());
  bool ok = perm.size() == x.rank();
  for (std::size_t i = 0; ok && i < check.size(); ++i) ok = check[i] == i;
  if (!ok) {
    throw ShapeError(StrCat("permute: invalid permutation for shape ",
                            ShapeString(x.shape())));
  }
  Shape out_shape;
  auto idx = std::make_shared<std::vector<std::size_t>>(
      PermuteIndex(x.shape(), perm, &out_shape));
  const auto xd = x.data();
  std::vector<double> out(idx->size());
  for (std::size_t i = 0; i < idx->size(); ++i) out[i] = xd[(*idx)[i]];
  return MakeResult("permute", std::move(out_shape), std::move(out), {x},
                    [x, idx](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      auto& gx = GradBuffer(*x.storage());
                      for (std::size_t i = 0; i < idx->size(); ++i) {
                        gx[(*idx)[i]] += o.grad[i];
                      }
                    });
}

Tensor Concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const std::size_t ax = NormAxis("concat", axis, xs[0].rank());
  Shape out_shape = xs[0].shape();
  out_shape[ax] = 0;
  for (const Tensor& t : xs) {
    bool ok = t.rank() == xs[0].rank();
    for (std::size_t i = 0; ok && i < t.rank(); ++i) {
      ok = i == ax || t.shape()[i] == xs[0].shape()[i];
    }
    if (!ok) {
      throw ShapeError(StrCat("concat: shape ", ShapeString(t.shape()),
                              " does not match ", ShapeString(xs[0].shape()),
                              " off axis ", ax));
    }
    out_shape[ax] += t.shape()[ax];
  }
  const AxisSplit os = SplitAt(out_shape, ax);
  std::vector<double> out(NumElements(out_shape));
  std::size_t offset = 0;
  for (const Tensor& t : xs) {
    const std::size_t len = t.shape()[ax] * os.inner;
    const auto td = t.data();
    for (std::size_t o = 0; o < os.outer; ++o) {
      std::copy_n(td.begin() + o * len, len,
                  out.begin() + o * os.n * os.inner + offset);
    }
    offset += len;
  }
  return MakeResult("concat", std::move(out_shape), std::move(out), xs,
                    [xs, os, ax](const TensorStorage& o) {
                      std::size_t offset = 0;
                      for (const Tensor& t : xs) {
                        const std::size_t len = t.shape()[ax] * os.inner;
                        if (t.requires_grad()) {
                          auto& gt = GradBuffer(*t.storage());
                          for (std::size_t q = 0; q < os.outer; ++q) {
                            for (std::size_t i = 0; i < len; ++i) {
                              gt[q * len + i] +=
                                  o.grad[q * os.n * os.inner + offset + i];
                            }
                          }
                        }
                        offset += len;
                      }
                    });
}

Tensor Slice(const Tensor& x, int axis, std::size_t begin, std::size_t end) {
  const std::size_t ax = NormAxis("slice", axis, x.rank());
  if (begin > end || end > x.shape()[ax]) {
    throw ShapeError(StrCat("slice: range [", begin, ", ", end,
                            ") invalid for axis ", ax, " of ",
                            ShapeString(x.shape())));
  }
  const AxisSplit s = SplitAt(x.shape(), ax);
  Shape out_shape = x.shape();
  out_shape[ax] = end - begin;
  const std::size_t len = (end - begin) * s.inner;
  std::vector<double> out(s.outer * len);
  const auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xd.begin() + o * s.n * s.inner + begin * s.inner, len,
                out.begin() + o * len);
  }
  return MakeResult("slice", std::move(out_shape), std::move(out), {x},
                    [x, s, begin, len](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      auto& gx = GradBuffer(*x.storage());
                      for (std::size_t q = 0; q < s.outer; ++q) {
                        for (std::size_t i = 0; i < len; ++i) {
                          gx[q * s.n * s.inner + begin * s.inner + i] +=
                              o.grad[q * len + i];
                        }
                      }
                    });
}

Tensor Sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return MakeResult("sum", {}, {acc}, {x}, [x](const TensorStorage& o) {
    if (!x.requires_grad()) return;
    auto& gx = GradBuffer(*x.storage());
    for (double& g : gx) g += o.grad[0];
  });
}

Tensor Sum(const Tensor& x, int axis, bool keepdim) {
  const std::size_t ax = NormAxis("sum", axis, x.rank());
  const AxisSplit s = SplitAt(x.shape(), ax);
  Shape out_shape = x.shape();
  if (keepdim) {
    out_shape[ax] = 1;
  } else {
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(ax));
  }
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.n; ++j) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        out[o * s.inner + i] += xd[(o * s.n + j) * s.inner + i];
      }
    }
  }
  return MakeResult("sum_axis", std::move(out_shape), std::move(out), {x},
                    [x, s](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      auto& gx = GradBuffer(*x.storage());
                      for (std::size_t q = 0; q < s.outer; ++q) {
                        for (std::size_t j = 0; j < s.n; ++j) {
                          for (std::size_t i = 0; i < s.inner; ++i) {
                            gx[(q * s.n + j) * s.inner + i] +=
                                o.grad[q * s.inner + i];
                          }
                        }
                      }
                    });
}

Tensor Mean(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean: empty tensor");
  return Scale(Sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor Mean(const Tensor& x, int axis, bool keepdim) {
  const std::size_t n = x.dim(axis);
  if (n == 0) throw ShapeError("mean: empty axis");
  return Scale(Sum(x, axis, keepdim), 1.0 / static_cast<double>(n));
}

Tensor Softmax(const Tensor& x, int axis) {
  const std::size_t ax = NormAxis("softmax", axis, x.rank());
  const AxisSplit s = SplitAt(x.shape(), ax);
  if (s.n == 0) {
    throw ShapeError(StrCat("softmax: empty axis ", ax, " in shape ",
                            ShapeString(x.shape())));
  }
  const kernels::SoftmaxShape ks{s.outer, s.n, s.inner};
  std::vector<double> out(x.numel());
  if (kernels::Softmax(ks, x.data().data(), out.data()) != 0) {
    throw Error("softmax: a row has every entry at -inf");
  }
  return MakeResult("softmax", x.shape(), std::move(out), {x},
                    [x, ks](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      std::vector<double> tmp(o.data.size());
                      kernels::SoftmaxBackward(ks, o.data.data(),
                                               o.grad.data(), tmp.data());
                      AddInto(GradBuffer(*x.storage()), tmp);
                    });
}

Tensor LogSoftmax(const Tensor& x, int axis) {
  const std::size_t ax = NormAxis("log_softmax", axis, x.rank());
  const AxisSplit s = SplitAt(x.shape(), ax);
  if (s.n == 0) {
    throw ShapeError(StrCat("log_softmax: empty axis ", ax, " in shape ",
                            ShapeString(x.shape())));
  }
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s.n; ++j) {
        mx = std::max(mx, xd[base + j * s.inner]);
      }
      if (mx == -std::numeric_limits<double>::infinity()) {
        throw Error("log_softmax: a row has every entry at -inf");
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        sum += std::exp(xd[base + j * s.inner] - mx);
      }
      const double lse = mx + std::log(sum);
      for (std::size_t j = 0; j < s.n; ++j) {
        out[base + j * s.inner] = xd[base + j * s.inner] - lse;
      }
    }
  }
  return MakeResult(
      "log_softmax", x.shape(), std::move(out), {x},
      [x, s](const TensorStorage& o) {
        if (!x.requires_grad()) return;
        auto& gx = GradBuffer(*x.storage());
        for (std::size_t q = 0; q < s.outer; ++q) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = q * s.n * s.inner + in;
            double gsum = 0.0;
            for (std::size_t j = 0; j < s.n; ++j) {
              gsum += o.grad[base + j * s.inner];
            }
            for (std::size_t j = 0; j < s.n; ++j) {
              const std::size_t p = base + j * s.inner;
              gx[p] += o.grad[p] - std::exp(o.data[p]) * gsum;
            }
          }
        }
      });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  const std::size_t cols = x.dim(-1);
  if (cols == 0 || gamma.shape() != Shape{cols} ||
      beta.shape() != Shape{cols}) {
    throw ShapeError(StrCat("layer_norm: input ", ShapeString(x.shape()),
                            " with gamma ", ShapeString(gamma.shape()),
                            " and beta ", ShapeString(beta.shape())));
  }
  const std::size_t rows = x.numel() / cols;
  std::vector<double> out(x.numel());
  auto stats = std::make_shared<std::vector<double>>(2 * rows);
  kernels::LayerNorm(rows, cols, x.data().data(), gamma.data().data(),
                     beta.data().data(), eps, out.data(), stats->data(),
                     stats->data() + rows);
  return MakeResult(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, stats, rows, cols](const TensorStorage& o) {
        std::vector<double> dx(x.numel());
        std::vector<double> dg(cols);
        std::vector<double> db(cols);
        kernels::LayerNormBackward(rows, cols, x.data().data(),
                                   gamma.data().data(), stats->data(),
                                   stats->data() + rows, o.grad.data(),
                                   dx.data(), dg.data(), db.data());
        if (x.requires_grad()) AddInto(GradBuffer(*x.storage()), dx);
        if (gamma.requires_grad()) AddInto(GradBuffer(*gamma.storage()), dg);
        if (beta.requires_grad()) AddInto(GradBuffer(*beta.storage()), db);
      });
}

Conv1dOptions Conv1dOptions::Same(std::size_t length, std::size_t kernel,
                                  std::size_t stride) {
  const std::size_t out = (length + stride - 1) / stride;
  const std::size_t needed = out == 0 ? 0 : (out - 1) * stride + kernel;
  const std::size_t total = needed > length ? needed - length : 0;
  Conv1dOptions o;
  o.stride = stride;
  o.pad_left = total / 2;
  o.pad_right = total - o.pad_left;
  return o;
}

Tensor Conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv1dOptions& opt) {
  if (x.rank() != 3 || weight.rank() != 3 || bias.rank() != 1 ||
      weight.dim(1) != x.dim(2) || bias.dim(0) != weight.dim(2) ||
      opt.stride == 0) {
    throw ShapeError(StrCat("conv1d: input ", ShapeString(x.shape()),
                            ", weight ", ShapeString(weight.shape()),
                            ", bias ", ShapeString(bias.shape()),
                            ", stride ", opt.stride));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t len = x.dim(1);
  const std::size_t cin = x.dim(2);
  const std::size_t kw = weight.dim(0);
  const std::size_t cout = weight.dim(2);
  const std::size_t padded = len + opt.pad_left + opt.pad_right;
  if (padded < kw) {
    throw ShapeError(StrCat("conv1d: padded length ", padded,
                            " shorter than kernel ", kw));
  }
  const std::size_t lout = (padded - kw) / opt.stride + 1;
  const std::size_t rows = batch * lout;
  const std::size_t width = kw * cin;

  // im2col: row (b, t) holds the kw * cin inputs under output position t.
  auto cols = std::make_shared<std::vector<double>>(rows * width, 0.0);
  const auto xd = x.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < lout; ++t) {
      double* dst = cols->data() + (b * lout + t) * width;
      for (std::size_t q = 0; q < kw; ++q) {
        const std::size_t p = t * opt.stride + q;
        if (p < opt.pad_left || p - opt.pad_left >= len) continue;
        const std::size_t src = (b * len + (p - opt.pad_left)) * cin;
        std::copy_n(xd.begin() + src, cin, dst + q * cin);
      }
    }
  }
  std::vector<double> out(rows * cout);
  kernels::Gemm({1, rows, cout, width, false, false, 0, 0, 0}, cols->data(),
                weight.data().data(), out.data());
  const auto bd = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cout; ++c) out[r * cout + c] += bd[c];
  }
  return MakeResult(
      "conv1d", {batch, lout, cout}, std::move(out), {x, weight, bias},
      [x, weight, bias, cols, opt, batch, len, cin, lout, rows, width,
       cout](const TensorStorage& o) {
        const double* g = o.grad.data();
        if (weight.requires_grad()) {
          std::vector<double> tmp(width * cout);
          kernels::Gemm({1, width, cout, rows, true, false, 0, 0, 0},
                        cols->data(), g, tmp.data());
          AddInto(GradBuffer(*weight.storage()), tmp);
        }
        if (bias.requires_grad()) {
          auto& gb = GradBuffer(*bias.storage());
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cout; ++c) gb[c] += g[r * cout + c];
          }
        }
        if (x.requires_grad()) {
          std::vector<double> dcols(rows * width);
          kernels::Gemm({1, rows, width, cout, false, true, 0, 0, 0}, g,
                        weight.data().data(), dcols.data());
          auto& gx = GradBuffer(*x.storage());
          const std::size_t kw = width / cin;
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t t = 0; t < lout; ++t) {
              const double* src = dcols.data() + (b * lout + t) * width;
              for (std::size_t q = 0; q < kw; ++q) {
                const std::size_t p = t * opt.stride + q;
                if (p < opt.pad_left || p - opt.pad_left >= len) continue;
                double* dst = gx.data() + (b * len + (p - opt.pad_left)) * cin;
                for (std::size_t c = 0; c < cin; ++c) dst[c] += src[q * cin + c];
              }
            }
          }
        }
      });
}

Tensor Dropout(const Tensor& x, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ShapeError(StrCat("dropout: rate ", p, " outside [0, 1)"));
  }
  if (!train || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  for (double& m : *mask) m = rng.Uniform() < p ? 0.0 : keep_scale;
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * (*mask)[i];
  return MakeResult("dropout", x.shape(), std::move(out), {x},
                    [x, mask](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      auto& gx = GradBuffer(*x.storage());
                      for (std::size_t i = 0; i < gx.size(); ++i) {
                        gx[i] += o.grad[i] * (*mask)[i];
                      }
                    });
}

Tensor Embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) {
    throw ShapeError(StrCat("embedding: table must be [V, D], got ",
                            ShapeString(table.shape())));
  }
  const std::size_t vocab = table.dim(0);
  const std::size_t width = table.dim(1);
  auto rows = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
  std::vector<double> out(rows->size() * width);
  const auto td = table.data();
  for (std::size_t i = 0; i < rows->size(); ++i) {
    const int id = (*rows)[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ShapeError(StrCat("embedding: id ", id, " outside vocabulary of ",
                              vocab));
    }
    std::copy_n(td.begin() + static_cast<std::size_t>(id) * width, width,
                out.begin() + i * width);
  }
  return MakeResult("embedding", {rows->size(), width}, std::move(out),
                    {table}, [table, rows, width](const TensorStorage& o) {
                      if (!table.requires_grad()) return;
                      auto& gt = GradBuffer(*table.storage());
                      for (std::size_t i = 0; i < rows->size(); ++i) {
                        const auto r = static_cast<std::size_t>((*rows)[i]);
                        for (std::size_t j = 0; j < width; ++j) {
                          gt[r * width + j] += o.grad[i * width + j];
                        }
                      }
                    });
}

Tensor MaskedFill(const Tensor& x, const Tensor& mask, double value) {
  if (BroadcastShapes("masked_fill", x.shape(), mask.shape()) != x.shape()) {
    throw ShapeError(StrCat("masked_fill: mask ", ShapeString(mask.shape()),
                            " does not broadcast to ",
                            ShapeString(x.shape())));
  }
  const BroadcastMap map = MakeBroadcastMap(mask.shape(), x.shape());
  const auto md = mask.data();
  auto keep = std::make_shared<std::vector<char>>(x.numel());
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  ForEachSource(map, out.size(), [&](std::size_t i, std::size_t p) {
    const bool fill = md[p] != 0.0;
    (*keep)[i] = fill ? 0 : 1;
    out[i] = fill ? value : xd[i];
  });
  return MakeResult("masked_fill", x.shape(), std::move(out), {x},
                    [x, keep](const TensorStorage& o) {
                      if (!x.requires_grad()) return;
                      auto& gx = GradBuffer(*x.storage());
                      for (std::size_t i = 0; i < gx.size(); ++i) {
                        if ((*keep)[i]) gx[i] += o.grad[i];
                      }
                    });
}

}  // namespace mpc
