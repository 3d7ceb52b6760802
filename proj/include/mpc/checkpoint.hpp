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


// Model checkpoints stored in the array container: parameters, optional
// Adam moments, the run configuration snapshot and training metadata.

#ifndef MPC_CHECKPOINT_HPP_
#define MPC_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "mpc/model.hpp"
#include "mpc/optim.hpp"
#include "mpc/parameters.hpp"

namespace mpc {

struct Checkpoint {
  std::string config_ini;
  model::HeadKind head = model::HeadKind::kReconstruction;
  model::ModelConfig model;
  ParameterSet params;
  bool has_optimizer = false;
  AdamState adam;
  std::int64_t step = 0;
  double score = std::numeric_limits<double>::quiet_NaN();
  std::string score_metric;
  std::vector<std::string> classes;  // tagging label names by class id
  std::string bpe_json;              // seq2seq vocabulary
};

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Throws CheckpointError listing every differing model field.
void RequireModelConfig(const Checkpoint& ckpt, const model::ModelConfig& expected);

}  // namespace mpc

#endif  // MPC_CHECKPOINT_HPP_
