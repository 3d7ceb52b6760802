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


#include "mpc/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mpc/error.hpp"
#include "mpc/ops.hpp"

namespace mpc::pretrain {

using internal::StrCat;

MaskPlan MakeMaskPlan(std::size_t num_frames, std::size_t chunk, double rate,
                      Rng& rng) {
  if (chunk == 0) throw Error("make_mask_plan: chunk size must be >= 1");
  if (num_frames < chunk) {
    throw Error(StrCat("make_mask_plan: ", num_frames,
                       " frames is fewer than one chunk of ", chunk));
  }
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError(StrCat("make_mask_plan: rate ", rate, " outside [0, 1]"));
  }
  MaskPlan plan;
  plan.num_chunks = (num_frames + chunk - 1) / chunk;
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(rate * static_cast<double>(plan.num_chunks))));
  std::vector<std::size_t> pool(plan.num_chunks);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.UniformInt(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  plan.masked_chunks.assign(pool.begin(), pool.begin() + count);
  std::sort(plan.masked_chunks.begin(), plan.masked_chunks.end());
  plan.frame_mask.assign(num_frames, false);
  for (std::size_t c : plan.masked_chunks) {
    for (std::size_t t = c * chunk; t < std::min(num_frames, (c + 1) * chunk); ++t) {
      plan.frame_mask[t] = true;
    }
  }
  return plan;
}

std::vector<double> ApplyMask(std::span<const double> features,
                              std::size_t num_bins, const MaskPlan& plan) {
  if (num_bins == 0 || features.size() != plan.frame_mask.size() * num_bins) {
    throw ShapeError(StrCat("apply_mask: ", features.size(), " values with ",
                            num_bins, " bins do not match a plan of ",
                            plan.frame_mask.size(), " frames"));
  }
  std::vector<double> out(features.begin(), features.end());
  for (std::size_t t = 0; t < plan.frame_mask.size(); ++t) {
    if (plan.frame_mask[t]) {
      std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(t * num_bins), num_bins, 0.0);
    }
  }
  return out;
}

LossMode ParseLossMode(const std::string& name) {
  if (name == "masked") return LossMode::kMaskedOnly;
  if (name == "all") return LossMode::kAllValid;
  throw ConfigError(StrCat("unknown loss mode '", name, "' (masked|all)"));
}

const char* LossModeName(LossMode mode) {
  return mode == LossMode::kMaskedOnly ? "masked" : "all";
}

Tensor MaskedL1Loss(const Tensor& pred, const Tensor& target,
                    const Tensor& frame_weights) {
  if (pred.shape() != target.shape() || pred.rank() != 3 ||
      frame_weights.shape() != Shape{pred.dim(0), pred.dim(1)}) {
    throw ShapeError(StrCat("masked_l1_loss: pred ", ShapeString(pred.shape()),
                            ", target ", ShapeString(target.shape()),
                            ", weights ", ShapeString(frame_weights.shape())));
  }
  double selected = 0.0;
  for (double w : frame_weights.data()) selected += w;
  if (selected == 0.0) throw Error("masked_l1_loss: no frames selected");
  const Tensor w = Reshape(frame_weights, {pred.dim(0), pred.dim(1), 1});
  const Tensor err = Mul(Abs(Sub(pred, target)), w);
  return Scale(Sum(err), 1.0 / (selected * static_cast<double>(pred.dim(2))));
}

Tensor InfoNceLoss(const Tensor& context, const Tensor& positive,
                   const Tensor& negatives, const Tensor& bilinear) {
  if (context.rank() != 2 || positive.rank() != 2 || negatives.rank() != 3 ||
      bilinear.rank() != 2) {
    throw ShapeError("infonce_loss: expected context [M, Dc], positive [M, Dz], "
                     "negatives [M, K, Dz], bilinear [Dc, Dz]");
  }
  const std::size_t m = context.dim(0);
  const std::size_t dz = positive.dim(1);
  if (negatives.dim(1) == 0) throw Error("infonce_loss: no negative samples");
  if (positive.dim(0) != m || negatives.dim(0) != m || negatives.dim(2) != dz ||
      bilinear.dim(0) != context.dim(1) || bilinear.dim(1) != dz) {
    throw ShapeError(StrCat("infonce_loss: inconsistent shapes ",
                            ShapeString(context.shape()), " ",
                            ShapeString(positive.shape()), " ",
                            ShapeString(negatives.shape()), " ",
                            ShapeString(bilinear.shape())));
  }
  const Tensor projected = Reshape(MatMul(context, bilinear), {m, 1, dz});
  const Tensor candidates = Concat({Reshape(positive, {m, 1, dz}), negatives}, 1);
  const Tensor scores = MatMul(projected, candidates, /*transpose_b=*/true);
  const Tensor log_p = Slice(LogSoftmax(scores, -1), 2, 0, 1);
  return Scale(Mean(log_p), -1.0);
}

PretrainBatch MakePretrainBatch(
    const std::vector<const audio::FeatureSequence*>& sequences,
    std::size_t chunk, double mask_rate, LossMode mode, Rng& rng) {
  if (sequences.empty()) throw DataError("pretrain batch: no sequences");
  const std::size_t bins = sequences.front()->num_bins;
  std::size_t max_len = 0;
  for (const auto* s : sequences) {
    if (s->num_bins != bins) {
      throw DataError(StrCat("pretrain batch: '", s->source_id, "' has ",
                             s->num_bins, " bins, expected ", bins));
    }
    max_len = std::max(max_len, s->num_frames);
  }
  const std::size_t batch = sequences.size();
  std::vector<double> feats(batch * max_len * bins, 0.0);
  std::vector<double> targets(batch * max_len * bins, 0.0);
  std::vector<double> weights(batch * max_len, 0.0);
  PretrainBatch out;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& s = *sequences[b];
    MaskPlan plan = MakeMaskPlan(s.num_frames, chunk, mask_rate, rng);
    const std::vector<double> masked = ApplyMask(s.values, bins, plan);
    std::copy(s.values.begin(), s.values.end(), targets.begin() + b * max_len * bins);
    std::copy(masked.begin(), masked.end(), feats.begin() + b * max_len * bins);
    for (std::size_t t = 0; t < s.num_frames; ++t) {
      const bool use = mode == LossMode::kAllValid || plan.frame_mask[t];
      weights[b * max_len + t] = use ? 1.0 : 0.0;
    }
    out.frame_lengths.push_back(s.num_frames);
    out.plans.push_back(std::move(plan));
  }
  out.features = Tensor::FromData({batch, max_len, bins}, std::move(feats));
  out.targets = Tensor::FromData({batch, max_len, bins}, std::move(targets));
  out.loss_weights = Tensor::FromData({batch, max_len}, std::move(weights));
  return out;
}

std::vector<std::vector<std::size_t>> BucketBatches(
    const std::vector<std::size_t>& lengths, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lengths[a] < lengths[b];
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(
                                             std::min(order.size(), i + batch_size)));
  }
  for (std::size_t i = batches.size(); i > 1; --i) {
    std::swap(batches[i - 1], batches[rng.UniformInt(i)]);
  }
  return batches;
}

double EvaluateLoss(const ParameterSet& params, const model::ModelConfig& cfg,
                    const PretrainBatch& batch) {
  NoGradScope no_grad;
  Rng unused;
  const auto enc = model::Encode(params, cfg, batch.features, batch.frame_lengths,
                                 false, unused);
  const Tensor pred = model::ReconstructionHead(params, cfg, enc,
                                                batch.features.dim(1));
  return MaskedL1Loss(pred, batch.targets, batch.loss_weights).item();
}

double PretrainStep(const PretrainBatch& batch, ParameterSet& params,
                    AdamState& adam, const ScheduleConfig& schedule,
                    std::int64_t step, const model::ModelConfig& cfg,
                    Rng& dropout_rng) {
  params.ZeroGrad();
  Tape tape;
  double loss_value = 0.0;
  {
    TapeScope scope(tape);
    const auto enc = model::Encode(params, cfg, batch.features,
                                   batch.frame_lengths, true, dropout_rng);
    const Tensor pred = model::ReconstructionHead(params, cfg, enc,
                                                  batch.features.dim(1));
    const Tensor loss = MaskedL1Loss(pred, batch.targets, batch.loss_weights);
    loss_value = loss.item();
    Backward(tape, loss);
  }
  AdamStep(params, adam, LrAtStep(schedule, step));
  params.ZeroGrad();
  return loss_value;
}

}  // namespace mpc::pretrain
