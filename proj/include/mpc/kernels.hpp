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

// Dense numeric kernels behind the tensor ops.
//
// Every kernel exists twice: a plain serial reference in `kernels::serial`
// and a blocked, OpenMP-parallel version in `kernels::omp`. Both accumulate
// each output element in exactly the same order, so their results are
// bit-identical for any thread count (the library is compiled with
// -ffp-contract=off to keep the compiler from fusing multiply-adds
// differently in the two variants). The unqualified entry points dispatch to
// the parallel variant.

#ifndef MPC_KERNELS_HPP_
#define MPC_KERNELS_HPP_

#include <cstddef>

namespace mpc::kernels {

// C[b] = op(A[b]) * op(B[b]) for b in [0, batch). op(A) is m x k and op(B) is
// k x n; with trans_a the stored A is k x m, with trans_b the stored B is
// n x k. A batch stride of 0 broadcasts that operand across the batch. C is
// overwritten.
struct GemmShape {
  std::size_t batch = 1;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  bool trans_a = false;
  bool trans_b = false;
  std::size_t stride_a = 0;
  std::size_t stride_b = 0;
  std::size_t stride_c = 0;
};

// Softmax over the middle axis of an [outer, n, inner] block. Returns the
// number of rows whose entries are all -inf; those rows are written as zeros.
struct SoftmaxShape {
  std::size_t outer = 1;
  std::size_t n = 0;
  std::size_t inner = 1;
};

namespace serial {

void Gemm(const GemmShape& s, const double* a, const double* b, double* c);
std::size_t Softmax(const SoftmaxShape& s, const double* x, double* y);
void SoftmaxBackward(const SoftmaxShape& s, const double* y, const double* dy,
                     double* dx);
void LayerNorm(std::size_t rows, std::size_t cols, const double* x,
               const double* gamma, const double* beta, double eps, double* y,
               double* mean, double* rstd);
void LayerNormBackward(std::size_t rows, std::size_t cols, const double* x,
                       const double* gamma, const double* mean,
                       const double* rstd, const double* dy, double* dx,
                       double* dgamma, double* dbeta);

}  // namespace serial

namespace omp {

void Gemm(const GemmShape& s, const double* a, const double* b, double* c);
std::size_t Softmax(const SoftmaxShape& s, const double* x, double* y);
void SoftmaxBackward(const SoftmaxShape& s, const double* y, const double* dy,
                     double* dx);
void LayerNorm(std::size_t rows, std::size_t cols, const double* x,
               const double* gamma, const double* beta, double eps, double* y,
               double* mean, double* rstd);
void LayerNormBackward(std::size_t rows, std::size_t cols, const double* x,
                       const double* gamma, const double* mean,
                       const double* rstd, const double* dy, double* dx,
                       double* dgamma, double* dbeta);

// Threads the parallel kernels would use (1 without OpenMP support).
int MaxThreads();

}  // namespace omp

inline void Gemm(const GemmShape& s, const double* a, const double* b,
                 double* c) {
  omp::Gemm(s, a, b, c);
}
inline std::size_t Softmax(const SoftmaxShape& s, const double* x, double* y) {
  return omp::Softmax(s, x, y);
}
inline void SoftmaxBackward(const SoftmaxShape& s, const double* y,
                            const double* dy, double* dx) {
  omp::SoftmaxBackward(s, y, dy, dx);
}
inline void LayerNorm(std::size_t rows, std::size_t cols, const double* x,
                      const double* gamma, const double* beta, double eps,
                      double* y, double* mean, double* rstd) {
  omp::LayerNorm(rows, cols, x, gamma, beta, eps, y, mean, rstd);
}
inline void LayerNormBackward(std::size_t rows, std::size_t cols,
                              const double* x, const double* gamma,
                              const double* mean, const double* rstd,
                              const double* dy, double* dx, double* dgamma,
                              double* dbeta) {
  omp::LayerNormBackward(rows, cols, x, gamma, mean, rstd, dy, dx, dgamma,
                         dbeta);
}

}  // namespace mpc::kernels

#endif  // MPC_KERNELS_HPP_
