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


// Length-normalized beam search over an abstract next-token scorer.
//
// Hypothesis score is the summed log-probability divided by the number of
// scored tokens (including the end token once emitted). Candidates with equal
// log-probability are ordered by their token sequence, smaller ids first.

#ifndef MPC_BEAM_SEARCH_HPP_
#define MPC_BEAM_SEARCH_HPP_

#include <cstddef>
#include <vector>

#include "mpc/model.hpp"

namespace mpc::model {

class StepScorer {
 public:
  virtual ~StepScorer() = default;
  // Log-probabilities of the next token for each prefix. All prefixes have
  // the same length and start with the start token.
  virtual std::vector<std::vector<double>> NextLogProbs(
      const std::vector<std::vector<int>>& prefixes) = 0;
};

struct BeamOptions {
  std::size_t beam = 10;
  std::size_t max_len = 64;  // generated tokens, end token included
  int bos = 1;
  int eos = 2;
};

struct BeamResult {
  std::vector<int> tokens;  // without start and end tokens
  double log_prob = 0.0;
  double score = 0.0;
  // No hypothesis emitted the end token; `tokens` is the best partial one.
  bool reached_max_len = false;
};

BeamResult BeamSearch(StepScorer& scorer, const BeamOptions& options);

// Scores prefixes with the decoder for one encoded utterance.
class DecoderScorer : public StepScorer {
 public:
  // `enc` must hold a single batch element.
  DecoderScorer(const ParameterSet& params, const ModelConfig& cfg,
                const EncoderOutput& enc);
  std::vector<std::vector<double>> NextLogProbs(
      const std::vector<std::vector<int>>& prefixes) override;

 private:
  const ParameterSet& params_;
  const ModelConfig& cfg_;
  const EncoderOutput& enc_;
};

}  // namespace mpc::model

#endif  // MPC_BEAM_SEARCH_HPP_
