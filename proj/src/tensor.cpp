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

#include "mpc/tensor.hpp"

#include <sstream>

#include "mpc/error.hpp"

namespace mpc {

namespace {
thread_local Tape* g_current_tape = nullptr;
}  // namespace

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::Zeros(Shape shape) { return Full(std::move(shape), 0.0); }

Tensor Tensor::Full(Shape shape, double value) {
  auto s = std::make_shared<TensorStorage>();
  s->data.assign(NumElements(shape), value);
  s->shape = std::move(shape);
  return Tensor(std::move(s));
}

Tensor Tensor::FromData(Shape shape, std::vector<double> data) {
  if (NumElements(shape) != data.size()) {
    throw ShapeError(internal::StrCat("FromData: shape ", ShapeString(shape),
                                      " needs ", NumElements(shape),
                                      " values, got ", data.size()));
  }
  auto s = std::make_shared<TensorStorage>();
  s->shape = std::move(shape);
  s->data = std::move(data);
  return Tensor(std::move(s));
}

Tensor Tensor::Scalar(double value) { return FromData({}, {value}); }

std::size_t Tensor::dim(int axis) const {
  const int r = static_cast<int>(rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError(internal::StrCat("axis ", axis, " out of range for shape ",
                                      ShapeString(shape())));
  }
  return storage_->shape[static_cast<std::size_t>(a)];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError(internal::StrCat("item() on tensor of shape ",
                                      ShapeString(shape())));
  }
  return storage_->data[0];
}

Tensor& Tensor::set_requires_grad(bool value) {
  storage_->requires_grad = value;
  return *this;
}

Tensor Tensor::Clone() const { return FromData(shape(), storage_->data); }

void Tape::Record(Node node) { nodes_.push_back(std::move(node)); }

void Tape::Reset() {
  nodes_.clear();
  consumed_ = false;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_current_tape) {
  g_current_tape = &tape;
}

TapeScope::~TapeScope() { g_current_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_current_tape) {
  g_current_tape = nullptr;
}
NoGradScope::~NoGradScope() { g_current_tape = previous_; }

Tape* CurrentTape() { return g_current_tape; }

void Backward(Tape& tape, const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError(internal::StrCat(
        "backward: loss must be a scalar, got shape ",
        loss.defined() ? ShapeString(loss.shape()) : std::string("<undefined>")));
  }
  if (tape.consumed_) {
    throw Error("backward: tape already consumed; record a new forward pass");
  }
  const TensorStorage* target = loss.storage().get();
  std::size_t end = tape.nodes_.size();
  while (end > 0 && tape.nodes_[end - 1].output.get() != target) --end;
  if (end == 0) {
    throw Error("backward: loss was not produced on this tape");
  }
  tape.consumed_ = true;
  loss.storage()->grad.assign(1, 1.0);
  for (std::size_t i = end; i-- > 0;) {
    const Tape::Node& node = tape.nodes_[i];
    if (node.output->grad.empty()) continue;  // not reachable from loss
    node.backward();
  }
}

namespace internal {

std::vector<double>& GradBuffer(TensorStorage& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

Tensor MakeResult(const char* op, Shape shape, std::vector<double> data,
                  std::vector<Tensor> inputs,
                  std::function<void(const TensorStorage& out)> backward) {
  Tensor out = Tensor::FromData(std::move(shape), std::move(data));
  Tape* tape = CurrentTape();
  if (tape == nullptr) return out;
  bool any = false;
  for (const Tensor& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  out.set_requires_grad(true);
  Tape::Node node;
  node.op = op;
  node.inputs.reserve(inputs.size());
  for (const Tensor& in : inputs) node.inputs.push_back(in.storage());
  node.output = out.storage();
  // The closure holds the output weakly so the tape alone owns it.
  std::weak_ptr<TensorStorage> weak_out = out.storage();
  node.backward = [weak_out, fn = std::move(backward)]() {
    if (auto o = weak_out.lock()) fn(*o);
  };
  tape->Record(std::move(node));
  return out;
}

}  // namespace internal

}  // namespace mpc
