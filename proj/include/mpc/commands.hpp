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


// Command implementations behind the command-line tool. Each throws
// ConfigError, DataError or CheckpointError for the corresponding failures.

#ifndef MPC_COMMANDS_HPP_
#define MPC_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpc/config.hpp"
#include "mpc/finetune.hpp"

namespace mpc::commands {

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::filesystem::path init;  // finetune: checkpoint supplying the trunk
  std::filesystem::path out;   // output directory, or report file for evaluate
  std::optional<std::size_t> beam;
  std::optional<std::size_t> max_len;
  std::ostream* progress = nullptr;
};

struct EvalPoint {
  std::int64_t step = 0;
  double score = 0.0;
  std::filesystem::path checkpoint;  // empty for the step-0 evaluation
};

struct TrainResult {
  std::filesystem::path out_dir;
  std::filesystem::path final_checkpoint;
  std::string metric;
  std::vector<double> step_losses;
  std::vector<EvalPoint> evals;
  double final_score = 0.0;  // validation score of the averaged model
};

// Writes step checkpoints, train_log.jsonl and final.ckpt (the average of the
// best `average_best` step checkpoints by held-out masked L1) into the output
// directory.
TrainResult Pretrain(RunConfig config, const CommandOptions& options);

// Same outputs as Pretrain; validation uses UAR (tag) or BLEU (seq2seq).
TrainResult Finetune(RunConfig config, const CommandOptions& options);

struct EvalOutput {
  std::vector<finetune::EvalReport> reports;
  std::vector<std::string> hypotheses;  // seq2seq only, manifest order
};

// Scores a checkpoint on a manifest. Reports are printed to `progress` and,
// with a non-empty `out`, appended to that file.
EvalOutput Evaluate(const std::filesystem::path& checkpoint,
                    const std::filesystem::path& manifest, TaskKind task,
                    const CommandOptions& options);

// Writes the elementwise parameter mean of `inputs` to `out`.
void AverageCheckpoints(const std::vector<std::filesystem::path>& inputs,
                        const std::filesystem::path& out);

void InspectCheckpoint(const std::filesystem::path& path, std::ostream& os);

}  // namespace mpc::commands

#endif  // MPC_COMMANDS_HPP_
