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


#include "mpc/finetune.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "mpc/error.hpp"
#include "mpc/metrics.hpp"
#include "mpc/ops.hpp"

namespace mpc::finetune {

using internal::StrCat;

PaddedFeatures PadFeatures(const std::vector<const audio::FeatureSequence*>& seqs) {
  if (seqs.empty()) throw DataError("pad_features: empty batch");
  const std::size_t bins = seqs.front()->num_bins;
  std::size_t max_len = 0;
  for (const auto* s : seqs) {
    if (s->num_bins != bins) {
      throw DataError(StrCat("pad_features: '", s->source_id, "' has ", s->num_bins,
                             " bins, expected ", bins));
    }
    max_len = std::max(max_len, s->num_frames);
  }
  std::vector<double> data(seqs.size() * max_len * bins, 0.0);
  PaddedFeatures out;
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    std::copy(seqs[b]->values.begin(), seqs[b]->values.end(),
              data.begin() + static_cast<std::ptrdiff_t>(b * max_len * bins));
    out.frame_lengths.push_back(seqs[b]->num_frames);
  }
  out.features = Tensor::FromData({seqs.size(), max_len, bins}, std::move(data));
  return out;
}

void SetTokenTargets(FinetuneBatch& batch,
                     const std::vector<std::vector<int>>& tokens, int bos,
                     int eos, int pad) {
  std::size_t len = 0;
  for (const auto& t : tokens) len = std::max(len, t.size() + 1);
  batch.decoder_inputs = {std::vector<int>(tokens.size() * len, pad), tokens.size(), len};
  batch.decoder_targets.assign(tokens.size() * len, pad);
  for (std::size_t b = 0; b < tokens.size(); ++b) {
    int* in = batch.decoder_inputs.ids.data() + b * len;
    int* out = batch.decoder_targets.data() + b * len;
    in[0] = bos;
    for (std::size_t i = 0; i < tokens[b].size(); ++i) {
      in[i + 1] = tokens[b][i];
      out[i] = tokens[b][i];
    }
    out[tokens[b].size()] = eos;
  }
}

Tensor FinetuneLoss(const ParameterSet& params, const model::ModelConfig& cfg,
                    model::HeadKind head, const FinetuneBatch& batch,
                    double label_smoothing, int pad, bool train, Rng& rng) {
  const auto enc = model::Encode(params, cfg, batch.input.features,
                                 batch.input.frame_lengths, train, rng);
  switch (head) {
    case model::HeadKind::kTagging:
      if (batch.labels.size() != batch.input.frame_lengths.size()) {
        throw DataError(StrCat("finetune: ", batch.labels.size(), " labels for ",
                               batch.input.frame_lengths.size(), " utterances"));
      }
      return LabelSmoothedCrossEntropy(model::PoolingHead(params, cfg, enc),
                                       batch.labels, 0.0);
    case model::HeadKind::kSeq2Seq: {
      const Tensor logits =
          model::DecoderForward(params, cfg, enc, batch.decoder_inputs, train, rng);
      return LabelSmoothedCrossEntropy(logits, batch.decoder_targets,
                                       label_smoothing, pad);
    }
    case model::HeadKind::kReconstruction:
      break;
  }
  throw ConfigError("finetune: the reconstruction head is not a fine-tuning head");
}

double FinetuneStep(const FinetuneBatch& batch, ParameterSet& params,
                    model::HeadKind head, AdamState& adam,
                    const ScheduleConfig& schedule, std::int64_t step,
                    const model::ModelConfig& cfg, double label_smoothing,
                    int pad, Rng& dropout_rng) {
  params.ZeroGrad();
  Tape tape;
  double value = 0.0;
  {
    TapeScope scope(tape);
    const Tensor loss = FinetuneLoss(params, cfg, head, batch, label_smoothing, pad,
                                     true, dropout_rng);
    value = loss.item();
    Backward(tape, loss);
  }
  AdamStep(params, adam, LrAtStep(schedule, step));
  params.ZeroGrad();
  return value;
}

std::vector<int> PredictClasses(const ParameterSet& params,
                                const model::ModelConfig& cfg,
                                const PaddedFeatures& input) {
  NoGradScope no_grad;
  Rng unused;
  const auto enc = model::Encode(params, cfg, input.features, input.frame_lengths,
                                 false, unused);
  const Tensor logits = model::PoolingHead(params, cfg, enc);
  const std::size_t c = logits.dim(1);
  std::vector<int> out;
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    const auto row = logits.data().subspan(b * c, c);
    out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

model::BeamResult DecodeUtterance(const ParameterSet& params,
                                  const model::ModelConfig& cfg,
                                  const audio::FeatureSequence& features,
                                  const model::BeamOptions& options) {
  NoGradScope no_grad;
  Rng unused;
  const PaddedFeatures input = PadFeatures({&features});
  const auto enc = model::Encode(params, cfg, input.features, input.frame_lengths,
                                 false, unused);
  model::DecoderScorer scorer(params, cfg, enc);
  return model::BeamSearch(scorer, options);
}

ParameterSet AverageParameters(const std::vector<const ParameterSet*>& sets) {
  if (sets.empty()) throw CheckpointError("average_checkpoints: no inputs");
  const ParameterSet& first = *sets.front();
  for (std::size_t i = 1; i < sets.size(); ++i) {
    const ParameterSet& other = *sets[i];
    for (const auto& [name, t] : first) {
      if (!other.Contains(name)) {
        throw CheckpointError(StrCat("average_checkpoints: input ", i,
                                     " lacks parameter '", name, "'"));
      }
      if (other.Get(name).shape() != t.shape()) {
        throw CheckpointError(StrCat("average_checkpoints: parameter '", name, "' is ",
                                     ShapeString(other.Get(name).shape()), " in input ",
                                     i, " but ", ShapeString(t.shape()), " in input 0"));
      }
    }
    if (other.size() != first.size()) {
      for (const auto& [name, t] : other) {
        if (!first.Contains(name)) {
          throw CheckpointError(StrCat("average_checkpoints: input ", i,
                                       " has extra parameter '", name, "'"));
        }
      }
    }
  }
  ParameterSet out;
  const double inv = 1.0 / static_cast<double>(sets.size());
  for (const auto& [name, t] : first) {
    std::vector<double> sum(t.numel(), 0.0);
    for (const ParameterSet* s : sets) {
      const auto d = s->Get(name).data();
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d[i];
    }
    for (double& v : sum) v *= inv;
    out.Add(name, Tensor::FromData(t.shape(), std::move(sum)));
  }
  return out;
}

std::vector<std::string> SelectBestK(const std::vector<ScoredCheckpoint>& log,
                                     std::size_t k, Direction direction) {
  if (k == 0) throw ConfigError("select_best_k: k must be >= 1");
  if (log.size() < k) {
    std::cerr << "warning: only " << log.size() << " checkpoints available, averaging "
              << "all instead of the best " << k << "\n";
  }
  std::vector<ScoredCheckpoint> sorted = log;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [direction](const ScoredCheckpoint& a, const ScoredCheckpoint& b) {
                     if (a.score != b.score) {
                       return direction == Direction::kMinimize ? a.score < b.score
                                                                : a.score > b.score;
                     }
                     return a.step < b.step;
                   });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < std::min(k, sorted.size()); ++i) ids.push_back(sorted[i].id);
  return ids;
}

std::string EvalReport::ToJsonLine() const {
  nlohmann::json j;
  j["metric"] = metric;
  j["value"] = value;
  j["per_class"] = per_class;
  j["dataset"] = dataset;
  j["checkpoint"] = checkpoint;
  return j.dump();
}

void AppendReports(const std::filesystem::path& path,
                   const std::vector<EvalReport>& reports) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError(StrCat("cannot append to '", path.string(), "'"));
  for (const EvalReport& r : reports) out << r.ToJsonLine() << "\n";
}

}  // namespace mpc::finetune
