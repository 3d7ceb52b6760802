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


#include "mpc/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "mpc/error.hpp"
#include "mpc/ops.hpp"

namespace mpc {

using internal::StrCat;

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : n_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw Error("confusion matrix: need at least one class");
}

void ConfusionMatrix::Add(std::size_t reference, std::size_t hypothesis,
                          std::uint64_t count) {
  if (reference >= n_ || hypothesis >= n_) {
    throw Error(StrCat("confusion matrix: class (", reference, ", ", hypothesis,
                       ") outside ", n_, " classes"));
  }
  counts_[reference * n_ + hypothesis] += count;
}

void ConfusionMatrix::Merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) {
    throw Error(StrCat("confusion matrix: merging ", other.n_, " classes into ", n_));
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::RowSum(std::size_t r) const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < n_; ++c) s += at(r, c);
  return s;
}

std::uint64_t ConfusionMatrix::ColSum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t r = 0; r < n_; ++r) s += at(r, c);
  return s;
}

std::uint64_t ConfusionMatrix::Total() const {
  std::uint64_t s = 0;
  for (std::uint64_t v : counts_) s += v;
  return s;
}

std::vector<double> PerClassRecall(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.num_classes(), 0.0);
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const std::uint64_t row = cm.RowSum(c);
    if (row > 0) out[c] = static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
  }
  return out;
}

std::vector<double> PerClassF1(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.num_classes(), 0.0);
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t fn = cm.RowSum(c) - tp;
    const std::uint64_t fp = cm.ColSum(c) - tp;
    // 2PR / (P + R) in its single-division form.
    if (tp > 0) out[c] = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return out;
}

double Uar(const ConfusionMatrix& cm) {
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    if (cm.RowSum(c) == 0) {
      throw DataError(StrCat("uar: class ", c, " has no reference samples"));
    }
  }
  const auto recall = PerClassRecall(cm);
  double s = 0.0;
  for (double r : recall) s += r;
  return s / static_cast<double>(recall.size());
}

double MacroF1(const ConfusionMatrix& cm) {
  if (cm.Total() == 0) throw DataError("macro_f1: empty confusion matrix");
  const auto f1 = PerClassF1(cm);
  double s = 0.0;
  for (double f : f1) s += f;
  return s / static_cast<double>(f1.size());
}

std::vector<std::string> BleuTokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 128 && std::isspace(u)) {
      flush();
    } else if (u < 128 && std::ispunct(u)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return tokens;
}

void BleuStats::Merge(const BleuStats& other) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hyp_length += other.hyp_length;
  ref_length += other.ref_length;
  sentences += other.sentences;
}

BleuStats CollectBleuStats(const std::vector<std::string>& hypotheses,
                           const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size()) {
    throw DataError(StrCat("bleu: ", hypotheses.size(), " hypotheses for ",
                           references.size(), " references"));
  }
  BleuStats stats;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto hyp = BleuTokenize(hypotheses[s]);
    const auto ref = BleuTokenize(references[s]);
    stats.hyp_length += hyp.size();
    stats.ref_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, std::uint64_t> ref_counts, hyp_counts;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) {
        ++ref_counts[{ref.begin() + static_cast<std::ptrdiff_t>(i),
                      ref.begin() + static_cast<std::ptrdiff_t>(i + n)}];
      }
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
        ++hyp_counts[{hyp.begin() + static_cast<std::ptrdiff_t>(i),
                      hyp.begin() + static_cast<std::ptrdiff_t>(i + n)}];
      }
      for (const auto& [gram, count] : hyp_counts) {
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) stats.matches[n - 1] += std::min(count, it->second);
        stats.totals[n - 1] += count;
      }
    }
    ++stats.sentences;
  }
  return stats;
}

double BleuFromStats(const BleuStats& stats) {
  if (stats.sentences == 0) throw DataError("bleu: empty corpus");
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (stats.matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(stats.matches[n]) /
                        static_cast<double>(stats.totals[n]));
  }
  const double c = static_cast<double>(stats.hyp_length);
  const double r = static_cast<double>(stats.ref_length);
  const double log_bp = std::min(0.0, 1.0 - r / c);
  return 100.0 * std::exp(log_bp + log_sum / 4.0);
}

double Bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references) {
  return BleuFromStats(CollectBleuStats(hypotheses, references));
}

Tensor LabelSmoothedCrossEntropy(const Tensor& logits, std::span<const int> targets,
                                 double epsilon, int ignore_id) {
  if (logits.rank() < 1 || logits.dim(-1) == 0) {
    throw ShapeError(StrCat("label_smoothed_ce: logits ", ShapeString(logits.shape())));
  }
  const std::size_t v = logits.dim(-1);
  const std::size_t rows = logits.numel() / v;
  if (targets.size() != rows) {
    throw ShapeError(StrCat("label_smoothed_ce: ", targets.size(), " targets for ",
                            rows, " rows of logits"));
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ConfigError(StrCat("label_smoothed_ce: epsilon ", epsilon, " outside [0, 1)"));
  }
  std::vector<double> q(rows * v, 0.0);
  std::size_t used = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = targets[r];
    if (ignore_id >= 0 && t == ignore_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw DataError(StrCat("label_smoothed_ce: target ", t, " outside vocabulary of ", v));
    }
    for (std::size_t j = 0; j < v; ++j) q[r * v + j] = epsilon / static_cast<double>(v);
    q[r * v + static_cast<std::size_t>(t)] += 1.0 - epsilon;
    ++used;
  }
  if (used == 0) throw DataError("label_smoothed_ce: every target is ignored");
  const Tensor log_p = Reshape(LogSoftmax(logits, -1), {rows, v});
  const Tensor weighted = Mul(log_p, Tensor::FromData({rows, v}, std::move(q)));
  return Scale(Sum(weighted), -1.0 / static_cast<double>(used));
}

}  // namespace mpc
