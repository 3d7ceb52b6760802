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

// Tensor values and the tape that records operations for reverse-mode
// differentiation.
//
// A Tensor is a cheap handle to shared storage. Ops never mutate their inputs;
// the only in-place writes are gradient accumulation and optimizer updates of
// parameters. Recording happens only while a TapeScope is active on the
// current thread and at least one input requires a gradient.

#ifndef MPC_TENSOR_HPP_
#define MPC_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mpc {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

struct TensorStorage {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, double value);
  static Tensor FromData(Shape shape, std::vector<double> data);
  static Tensor Scalar(double value);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  // Negative axes count from the back.
  std::size_t dim(int axis) const;
  std::size_t numel() const { return storage_->data.size(); }

  std::span<const double> data() const { return storage_->data; }
  // Direct write access, for parameter initialization and optimizer updates.
  std::span<double> mutable_data() { return storage_->data; }
  double item() const;
  double at(std::size_t flat_index) const { return storage_->data[flat_index]; }

  bool requires_grad() const { return storage_->requires_grad; }
  Tensor& set_requires_grad(bool value);

  bool has_grad() const { return !storage_->grad.empty(); }
  std::span<const double> grad() const { return storage_->grad; }
  std::span<double> mutable_grad() { return storage_->grad; }
  void clear_grad() { storage_->grad.clear(); }

  // New tensor with the same values and shape, detached from any tape.
  Tensor Clone() const;

  const std::shared_ptr<TensorStorage>& storage() const { return storage_; }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage> s) : storage_(std::move(s)) {}
  std::shared_ptr<TensorStorage> storage_;
};

// Ordered record of differentiable operations. Nodes are appended as ops
// execute, so every node's inputs were produced earlier (or are leaves).
class Tape {
 public:
  struct Node {
    std::string op;
    std::vector<std::shared_ptr<TensorStorage>> inputs;
    std::shared_ptr<TensorStorage> output;
    // Reads output->grad and accumulates into the inputs that require grad.
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void Record(Node node);
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  bool consumed() const { return consumed_; }

  // Drops all nodes so the tape can record a fresh forward pass.
  void Reset();

 private:
  friend void Backward(Tape& tape, const Tensor& loss);
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Makes `tape` the recording target for ops on this thread while in scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Suspends recording for its lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

// Tape ops record into, or nullptr.
Tape* CurrentTape();

// Populates grad of every requires-grad tensor reachable from `loss`. Throws
// if `loss` is not a scalar, is not on the tape, or the tape was already
// consumed by an earlier call.
void Backward(Tape& tape, const Tensor& loss);

namespace internal {

// Returns the gradient buffer of `t`, allocating zeros on first use.
std::vector<double>& GradBuffer(TensorStorage& t);

// Builds an op result. When recording, `backward` is attached to a new tape
// node; it is called with the result storage after downstream gradients have
// been accumulated into it.
Tensor MakeResult(
    const char* op, Shape shape, std::vector<double> data,
    std::vector<Tensor> inputs,
    std::function<void(const TensorStorage& out)> backward);

}  // namespace internal

}  // namespace mpc

#endif  // MPC_TENSOR_HPP_
