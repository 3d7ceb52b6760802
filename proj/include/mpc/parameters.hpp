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

#ifndef MPC_PARAMETERS_HPP_
#define MPC_PARAMETERS_HPP_

#include <map>
#include <string>

#include "mpc/tensor.hpp"

namespace mpc {

// Named trainable tensors, iterated in name order.
class ParameterSet {
 public:
  using Map = std::map<std::string, Tensor>;

  // Registers `value` under a new name and marks it trainable.
  Tensor& Add(const std::string& name, Tensor value);
  const Tensor& Get(const std::string& name) const;
  Tensor& Get(const std::string& name);
  bool Contains(const std::string& name) const {
    return params_.count(name) != 0;
  }

  std::size_t size() const { return params_.size(); }
  std::size_t NumValues() const;
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }

  void ZeroGrad();
  // Deep copy with fresh storage.
  ParameterSet Clone() const;

 private:
  Map params_;
};

}  // namespace mpc

#endif  // MPC_PARAMETERS_HPP_
