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


// Masked predictive coding: chunk masks, masked frame reconstruction loss,
// the contrastive (InfoNCE) alternative objective and one training step.

#ifndef MPC_PRETRAIN_HPP_
#define MPC_PRETRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mpc/audio.hpp"
#include "mpc/model.hpp"
#include "mpc/optim.hpp"
#include "mpc/rng.hpp"

namespace mpc::pretrain {

struct MaskPlan {
  std::size_t num_chunks = 0;
  std::vector<std::size_t> masked_chunks;  // sorted
  std::vector<bool> frame_mask;            // true = masked
};

// Masks max(1, round(rate * ceil(T / N))) chunks drawn uniformly without
// replacement. Throws if T < N or rate is outside [0, 1].
MaskPlan MakeMaskPlan(std::size_t num_frames, std::size_t chunk, double rate,
                      Rng& rng);

// Returns a copy of the T x F row-major `features` with masked frames zeroed.
std::vector<double> ApplyMask(std::span<const double> features,
                              std::size_t num_bins, const MaskPlan& plan);

enum class LossMode { kMaskedOnly, kAllValid };

LossMode ParseLossMode(const std::string& name);
const char* LossModeName(LossMode mode);

// Mean absolute error over the frames selected by `frame_weights` [B, T]
// (entries 0 or 1), averaged over selected frames and feature bins.
Tensor MaskedL1Loss(const Tensor& pred, const Tensor& target,
                    const Tensor& frame_weights);

// Mean over contexts of -log softmax(score)[positive], where
// score_j = context^T W candidate_j. context [M, Dc], positive [M, Dz],
// negatives [M, K, Dz], bilinear [Dc, Dz].
Tensor InfoNceLoss(const Tensor& context, const Tensor& positive,
                   const Tensor& negatives, const Tensor& bilinear);

struct PretrainBatch {
  Tensor features;       // [B, T, F], masked and zero-padded
  Tensor targets;        // [B, T, F], zero-padded originals
  Tensor loss_weights;   // [B, T]
  std::vector<MaskPlan> plans;
  std::vector<std::size_t> frame_lengths;
};

PretrainBatch MakePretrainBatch(
    const std::vector<const audio::FeatureSequence*>& sequences,
    std::size_t chunk, double mask_rate, LossMode mode, Rng& rng);

// Groups indices of similar length into batches of at most `batch_size`;
// batch order is shuffled with `rng`.
std::vector<std::vector<std::size_t>> BucketBatches(
    const std::vector<std::size_t>& lengths, std::size_t batch_size, Rng& rng);

// Reconstruction loss without gradient tracking or dropout.
double EvaluateLoss(const ParameterSet& params, const model::ModelConfig& cfg,
                    const PretrainBatch& batch);

// Forward, backward and one Adam update at learning rate lr(step). Returns
// the loss before the update.
double PretrainStep(const PretrainBatch& batch, ParameterSet& params,
                    AdamState& adam, const ScheduleConfig& schedule,
                    std::int64_t step, const model::ModelConfig& cfg,
                    Rng& dropout_rng);

}  // namespace mpc::pretrain

#endif  // MPC_PRETRAIN_HPP_
