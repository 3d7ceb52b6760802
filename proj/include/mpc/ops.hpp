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

// Differentiable primitives. Each op validates shapes (throwing ShapeError
// with the op name and offending shapes), computes its result, and records a
// backward rule on the current tape when an input requires a gradient.
// Negative axis arguments count from the back.

#ifndef MPC_OPS_HPP_
#define MPC_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "mpc/rng.hpp"
#include "mpc/tensor.hpp"

namespace mpc {

// a: [..., M, K]. b: [K, N] shared across the leading dims of a, or
// [..., K, N] with the same leading dims. transpose_b reads b as [.., N, K].
Tensor MatMul(const Tensor& a, const Tensor& b, bool transpose_b = false);

// Elementwise with numpy-style broadcasting.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);

Tensor Scale(const Tensor& x, double factor);
Tensor Exp(const Tensor& x);
Tensor Log(const Tensor& x);
Tensor Relu(const Tensor& x);
Tensor Abs(const Tensor& x);

Tensor Reshape(const Tensor& x, Shape shape);
Tensor Permute(const Tensor& x, const std::vector<std::size_t>& perm);
Tensor Concat(const std::vector<Tensor>& xs, int axis);
Tensor Slice(const Tensor& x, int axis, std::size_t begin, std::size_t end);

Tensor Sum(const Tensor& x);
Tensor Sum(const Tensor& x, int axis, bool keepdim = false);
Tensor Mean(const Tensor& x);
Tensor Mean(const Tensor& x, int axis, bool keepdim = false);

Tensor Softmax(const Tensor& x, int axis);
Tensor LogSoftmax(const Tensor& x, int axis);

// Normalizes over the last axis; gamma and beta have the last axis' size.
Tensor LayerNorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;

  // Padding giving ceil(length / stride) outputs, extra pad on the right.
  static Conv1dOptions Same(std::size_t length, std::size_t kernel,
                            std::size_t stride);
};

// x: [B, L, Cin], weight: [K, Cin, Cout], bias: [Cout] -> [B, Lout, Cout].
Tensor Conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv1dOptions& options);

// Inverted dropout. Identity outside training or for p == 0.
Tensor Dropout(const Tensor& x, double p, bool train, Rng& rng);

// table: [V, D] -> [ids.size(), D].
Tensor Embedding(const Tensor& table, std::span<const int> ids);

// Positions where the (broadcastable, non-differentiable) mask is nonzero are
// replaced by `value` and receive no gradient.
Tensor MaskedFill(const Tensor& x, const Tensor& mask, double value);

}  // namespace mpc

#endif  // MPC_OPS_HPP_
