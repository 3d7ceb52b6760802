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


// Evaluation metrics and the label-smoothed cross-entropy objective.

#ifndef MPC_METRICS_HPP_
#define MPC_METRICS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mpc/tensor.hpp"

namespace mpc {

// Rows are reference classes, columns hypothesis classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void Add(std::size_t reference, std::size_t hypothesis, std::uint64_t count = 1);
  void Merge(const ConfusionMatrix& other);

  std::size_t num_classes() const { return n_; }
  std::uint64_t at(std::size_t reference, std::size_t hypothesis) const {
    return counts_[reference * n_ + hypothesis];
  }
  std::uint64_t RowSum(std::size_t reference) const;
  std::uint64_t ColSum(std::size_t hypothesis) const;
  std::uint64_t Total() const;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

std::vector<double> PerClassRecall(const ConfusionMatrix& cm);
// Precision and recall default to 0 for empty denominators; F1 is 0 when
// both are 0.
std::vector<double> PerClassF1(const ConfusionMatrix& cm);

// Mean per-class recall. Throws if a class has no reference samples.
double Uar(const ConfusionMatrix& cm);
// Mean per-class F1. Throws on an empty matrix.
double MacroF1(const ConfusionMatrix& cm);

// Splits ASCII punctuation into separate tokens, then splits on whitespace.
std::vector<std::string> BleuTokenize(const std::string& text);

struct BleuStats {
  std::array<std::uint64_t, 4> matches{};
  std::array<std::uint64_t, 4> totals{};
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;
  std::size_t sentences = 0;

  void Merge(const BleuStats& other);
};

BleuStats CollectBleuStats(const std::vector<std::string>& hypotheses,
                           const std::vector<std::string>& references);
// Corpus BLEU in [0, 100]; zero if any n-gram order has no match.
double BleuFromStats(const BleuStats& stats);
double Bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references);

// Mean over rows of -sum_v q_v log softmax(logits)_v with
// q = (1 - epsilon) onehot(target) + epsilon / V. `logits` is [..., V];
// rows whose target equals `ignore_id` are excluded (ignore_id < 0 disables).
Tensor LabelSmoothedCrossEntropy(const Tensor& logits, std::span<const int> targets,
                                 double epsilon, int ignore_id = -1);

}  // namespace mpc

#endif  // MPC_METRICS_HPP_
