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

#include "mpc/parameters.hpp"

#include "mpc/error.hpp"

namespace mpc {

using internal::StrCat;

Tensor& ParameterSet::Add(const std::string& name, Tensor value) {
  if (params_.count(name)) {
    throw Error(StrCat("parameter '", name, "' registered twice"));
  }
  value.set_requires_grad(true);
  return params_.emplace(name, std::move(value)).first->second;
}

const Tensor& ParameterSet::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(StrCat("no parameter '", name, "'"));
  return it->second;
}

Tensor& ParameterSet::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(StrCat("no parameter '", name, "'"));
  return it->second;
}

std::size_t ParameterSet::NumValues() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

void ParameterSet::ZeroGrad() {
  for (auto& [name, t] : params_) t.clear_grad();
}

ParameterSet ParameterSet::Clone() const {
  ParameterSet out;
  for (const auto& [name, t] : params_) out.Add(name, t.Clone());
  return out;
}

}  // namespace mpc
