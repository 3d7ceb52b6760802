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


// Fine-tuning objectives, prediction, checkpoint averaging and evaluation
// report records.

#ifndef MPC_FINETUNE_HPP_
#define MPC_FINETUNE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpc/audio.hpp"
#include "mpc/beam_search.hpp"
#include "mpc/model.hpp"
#include "mpc/optim.hpp"

namespace mpc::finetune {

struct PaddedFeatures {
  Tensor features;  // [B, T_max, F], zero-padded
  std::vector<std::size_t> frame_lengths;
};

PaddedFeatures PadFeatures(const std::vector<const audio::FeatureSequence*>& seqs);

struct FinetuneBatch {
  PaddedFeatures input;
  std::vector<int> labels;             // tagging: one class id per element
  model::TokenBatch decoder_inputs;    // seq2seq: start token + tokens, padded
  std::vector<int> decoder_targets;    // seq2seq: tokens + end token, padded
};

// Builds the decoder input/target pair for token sequences (no start or end
// tokens), padding with `pad`.
void SetTokenTargets(FinetuneBatch& batch,
                     const std::vector<std::vector<int>>& tokens, int bos,
                     int eos, int pad);

// Tagging: cross-entropy on pooled logits. Seq2seq: label-smoothed
// cross-entropy on decoder logits, pad targets excluded.
Tensor FinetuneLoss(const ParameterSet& params, const model::ModelConfig& cfg,
                    model::HeadKind head, const FinetuneBatch& batch,
                    double label_smoothing, int pad, bool train, Rng& rng);

// One Adam update of every parameter; returns the loss before the update.
double FinetuneStep(const FinetuneBatch& batch, ParameterSet& params,
                    model::HeadKind head, AdamState& adam,
                    const ScheduleConfig& schedule, std::int64_t step,
                    const model::ModelConfig& cfg, double label_smoothing,
                    int pad, Rng& dropout_rng);

// Arg-max classes, ties to the smaller id.
std::vector<int> PredictClasses(const ParameterSet& params,
                                const model::ModelConfig& cfg,
                                const PaddedFeatures& input);

model::BeamResult DecodeUtterance(const ParameterSet& params,
                                  const model::ModelConfig& cfg,
                                  const audio::FeatureSequence& features,
                                  const model::BeamOptions& options);

// Elementwise mean per parameter. Throws CheckpointError on name or shape
// mismatch.
ParameterSet AverageParameters(const std::vector<const ParameterSet*>& sets);

enum class Direction { kMinimize, kMaximize };

struct ScoredCheckpoint {
  std::string id;
  std::int64_t step = 0;
  double score = 0.0;
};

// Ids of the k best entries, best first; equal scores prefer earlier steps.
// With fewer than k entries all are returned and a warning is printed.
std::vector<std::string> SelectBestK(const std::vector<ScoredCheckpoint>& log,
                                     std::size_t k, Direction direction);

struct EvalReport {
  std::string metric;
  double value = 0.0;
  std::vector<double> per_class;
  std::string dataset;
  std::string checkpoint;

  std::string ToJsonLine() const;
};

void AppendReports(const std::filesystem::path& path,
                   const std::vector<EvalReport>& reports);

}  // namespace mpc::finetune

#endif  // MPC_FINETUNE_HPP_
