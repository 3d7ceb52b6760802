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


#include "mpc/beam_search.hpp"

#include <algorithm>
#include <cmath>

#include "mpc/error.hpp"
#include "mpc/ops.hpp"

namespace mpc::model {

using internal::StrCat;

namespace {

struct Hypothesis {
  std::vector<int> tokens;  // start token first
  double log_prob = 0.0;
};

double Normalized(const Hypothesis& h) {
  return h.log_prob / static_cast<double>(h.tokens.size() - 1);
}

// Higher log-probability first, then smaller token sequence.
bool Before(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

bool BetterFinal(const Hypothesis& a, const Hypothesis& b) {
  const double sa = Normalized(a);
  const double sb = Normalized(b);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

BeamResult ToResult(const Hypothesis& h, bool finished) {
  BeamResult r;
  r.tokens.assign(h.tokens.begin() + 1, h.tokens.end() - (finished ? 1 : 0));
  r.log_prob = h.log_prob;
  r.score = Normalized(h);
  r.reached_max_len = !finished;
  return r;
}

}  // namespace

BeamResult BeamSearch(StepScorer& scorer, const BeamOptions& options) {
  if (options.beam == 0) throw Error("beam_search: beam must be >= 1");
  if (options.max_len == 0) throw Error("beam_search: max_len must be >= 1");
  std::vector<Hypothesis> live{{{options.bos}, 0.0}};
  std::vector<Hypothesis> finished;
  for (std::size_t step = 0; step < options.max_len && !live.empty(); ++step) {
    std::vector<std::vector<int>> prefixes;
    prefixes.reserve(live.size());
    for (const Hypothesis& h : live) prefixes.push_back(h.tokens);
    const auto log_probs = scorer.NextLogProbs(prefixes);
    if (log_probs.size() != live.size()) {
      throw Error(StrCat("beam_search: scorer returned ", log_probs.size(),
                         " rows for ", live.size(), " prefixes"));
    }
    std::vector<Hypothesis> candidates;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t tok = 0; tok < log_probs[i].size(); ++tok) {
        const double lp = log_probs[i][tok];
        if (lp == -INFINITY) continue;
        Hypothesis c{live[i].tokens, live[i].log_prob + lp};
        c.tokens.push_back(static_cast<int>(tok));
        candidates.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(options.beam, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), Before);
    candidates.resize(keep);
    live.clear();
    for (Hypothesis& c : candidates) {
      if (c.tokens.back() == options.eos) {
        finished.push_back(std::move(c));
      } else {
        live.push_back(std::move(c));
      }
    }
    if (finished.size() >= options.beam) break;
  }
  if (!finished.empty()) {
    return ToResult(*std::min_element(finished.begin(), finished.end(), BetterFinal),
                    true);
  }
  if (live.empty()) throw Error("beam_search: every continuation has zero probability");
  return ToResult(*std::min_element(live.begin(), live.end(), BetterFinal), false);
}

DecoderScorer::DecoderScorer(const ParameterSet& params, const ModelConfig& cfg,
                             const EncoderOutput& enc)
    : params_(params), cfg_(cfg), enc_(enc) {
  if (enc.states.dim(0) != 1) {
    throw ShapeError(StrCat("decoder_scorer: expected one utterance, got ",
                            enc.states.dim(0)));
  }
}

std::vector<std::vector<double>> DecoderScorer::NextLogProbs(
    const std::vector<std::vector<int>>& prefixes) {
  NoGradScope no_grad;
  const std::size_t k = prefixes.size();
  const std::size_t len = prefixes.front().size();
  TokenBatch batch{{}, k, len};
  batch.ids.reserve(k * len);
  for (const auto& p : prefixes) batch.ids.insert(batch.ids.end(), p.begin(), p.end());

  const auto src = enc_.states.data();
  std::vector<double> tiled;
  tiled.reserve(k * src.size());
  for (std::size_t i = 0; i < k; ++i) tiled.insert(tiled.end(), src.begin(), src.end());
  EncoderOutput enc{Tensor::FromData({k, enc_.states.dim(1), cfg_.d_model},
                                     std::move(tiled)),
                    std::vector<std::size_t>(k, enc_.valid_lengths[0])};
  Rng unused;
  const Tensor logits = DecoderForward(params_, cfg_, enc, batch, false, unused);
  const Tensor last = LogSoftmax(Slice(logits, 1, len - 1, len), -1);
  const std::size_t v = cfg_.vocab_size;
  std::vector<std::vector<double>> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i].assign(last.data().begin() + i * v, last.data().begin() + (i + 1) * v);
  }
  return out;
}

}  // namespace mpc::model
