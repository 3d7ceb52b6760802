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


// Run configuration: a sectioned key=value file.
//
//   [task]      kind, seed
//   [frontend]  audio feature settings and speed perturbation factors
//   [model]     Transformer sizes
//   [schedule]  warmup learning-rate constants
//   [train]     batching, masking, smoothing, decoding and checkpointing
//   [paths]     manifests, output directory, feature cache
//
// Relative paths resolve against the directory of the config file.

#ifndef MPC_CONFIG_HPP_
#define MPC_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpc/audio.hpp"
#include "mpc/model.hpp"
#include "mpc/optim.hpp"
#include "mpc/pretrain.hpp"

namespace mpc {

enum class TaskKind { kPretrain, kTag, kSeq2Seq };

const char* TaskName(TaskKind task);
TaskKind ParseTask(const std::string& name);
model::HeadKind HeadForTask(TaskKind task);

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 50;
  std::int64_t max_steps = 0;  // 0: run all epochs
  double mask_rate = 0.15;
  pretrain::LossMode loss_mode = pretrain::LossMode::kMaskedOnly;
  double label_smoothing = 0.1;
  std::size_t beam = 10;
  std::size_t max_len = 64;
  std::size_t eval_beam = 1;  // beam used for periodic validation
  std::int64_t checkpoint_every = 1000;
  std::int64_t log_every = 100;
  std::size_t average_best = 5;
  std::size_t bpe_vocab_size = 8000;
};

struct PathsConfig {
  std::filesystem::path train_manifest;
  std::filesystem::path dev_manifest;  // empty: validate on the training set
  std::filesystem::path out_dir;
  std::filesystem::path feature_cache;  // empty: no caching
};

struct RunConfig {
  TaskKind task = TaskKind::kPretrain;
  std::uint64_t seed = 1;
  audio::FrontendConfig frontend;
  std::vector<double> speed_factors;  // extra training copies, original kept
  model::ModelConfig model;
  ScheduleConfig schedule;
  TrainConfig train;
  PathsConfig paths;

  // Task-dependent defaults for everything not given explicitly.
  static RunConfig Defaults(TaskKind task);
  // Throws ConfigError naming the offending section and key.
  static RunConfig FromIniString(const std::string& text,
                                 const std::filesystem::path& base_dir = {});
  static RunConfig FromIniFile(const std::filesystem::path& path);
  std::string ToIni() const;

  // Field checks; with `check_paths`, referenced manifests must exist.
  void Validate(bool check_paths) const;
};

// "section.key: expected vs found" lines for every differing model field.
std::vector<std::string> DiffModelConfig(const model::ModelConfig& expected,
                                         const model::ModelConfig& found);

}  // namespace mpc

#endif  // MPC_CONFIG_HPP_
