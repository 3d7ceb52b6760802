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


#include "mpc/bpe.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "mpc/error.hpp"

namespace mpc {

using internal::StrCat;

namespace {

const char* const kSpecialNames[] = {"<pad>", "<s>", "</s>", "<unk>"};

std::vector<std::string> Chars(const std::string& word) {
  std::vector<std::string> out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    out.emplace_back(1, word[i]);
  }
  if (!out.empty()) out.back() += BpeVocab::kEndOfWord;
  return out;
}

}  // namespace

std::vector<std::string> SplitWords(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

BpeVocab BpeVocab::Train(const std::vector<std::string>& corpus,
                         std::size_t target_size) {
  std::map<std::string, std::size_t> word_counts;
  for (const std::string& line : corpus) {
    for (std::string& w : SplitWords(line)) ++word_counts[std::move(w)];
  }
  if (word_counts.empty()) throw DataError("bpe_train: empty corpus");

  BpeVocab vocab;
  std::set<char> chars;
  for (const auto& [w, n] : word_counts) chars.insert(w.begin(), w.end());
  for (char c : chars) {
    vocab.base_.emplace_back(1, c);
    vocab.base_.push_back(std::string(1, c) + kEndOfWord);
  }
  std::sort(vocab.base_.begin(), vocab.base_.end());
  const std::size_t base_size = kNumSpecial + vocab.base_.size();
  if (target_size < base_size) {
    throw ConfigError(StrCat("bpe_train: target size ", target_size,
                             " is below the base vocabulary of ", base_size));
  }

  std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
  for (const auto& [w, n] : word_counts) words.emplace_back(Chars(w), n);

  while (base_size + vocab.merges_.size() < target_size) {
    std::map<std::pair<std::string, std::string>, std::size_t> pairs;
    for (const auto& [syms, n] : words) {
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) pairs[{syms[i], syms[i + 1]}] += n;
    }
    // std::map iterates pairs in lexicographic order, so the first maximum
    // wins ties.
    auto best = pairs.end();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (best == pairs.end() || it->second > best->second) best = it;
    }
    if (best == pairs.end() || best->second < 2) break;
    const auto [left, right] = best->first;
    const std::string joined = left + right;
    for (auto& [syms, n] : words) {
      std::vector<std::string> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          next.push_back(joined);
          ++i;
        } else {
          next.push_back(std::move(syms[i]));
        }
      }
      syms = std::move(next);
    }
    vocab.merges_.emplace_back(left, right);
  }
  vocab.Build();
  return vocab;
}

void BpeVocab::Build() {
  symbols_.assign(std::begin(kSpecialNames), std::end(kSpecialNames));
  ids_.clear();
  ranks_.clear();
  auto add = [&](const std::string& s) {
    if (ids_.count(s) == 0) {
      ids_[s] = static_cast<int>(symbols_.size());
      symbols_.push_back(s);
    }
  };
  for (const std::string& s : base_) add(s);
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    ranks_.emplace(merges_[r], r);
    add(merges_[r].first + merges_[r].second);
  }
}

std::string BpeVocab::ToJson() const {
  nlohmann::json j;
  j["base"] = base_;
  j["merges"] = nlohmann::json::array();
  for (const auto& [a, b] : merges_) j["merges"].push_back({a, b});
  return j.dump();
}

BpeVocab BpeVocab::FromJson(const std::string& json) {
  BpeVocab v;
  try {
    const auto j = nlohmann::json::parse(json);
    v.base_ = j.at("base").get<std::vector<std::string>>();
    for (const auto& m : j.at("merges")) {
      v.merges_.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(StrCat("bpe vocabulary: ", e.what()));
  }
  v.Build();
  return v;
}

std::vector<std::string> BpeVocab::SegmentWord(const std::string& word) const {
  std::vector<std::string> syms = Chars(word);
  while (syms.size() > 1) {
    std::size_t best_rank = ranks_.size();
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto it = ranks_.find({syms[i], syms[i + 1]});
      if (it != ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_pos = i;
      }
    }
    if (best_rank == ranks_.size()) break;
    const auto& [left, right] = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (i >= best_pos && i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
        next.push_back(left + right);
        ++i;
      } else {
        next.push_back(std::move(syms[i]));
      }
    }
    syms = std::move(next);
  }
  return syms;
}

std::vector<int> BpeVocab::Encode(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& w : SplitWords(text)) {
    for (const std::string& s : SegmentWord(w)) {
      const auto it = ids_.find(s);
      ids.push_back(it == ids_.end() ? kUnk : it->second);
    }
  }
  return ids;
}

std::string BpeVocab::Decode(const std::vector<int>& ids) const {
  std::string out;
  const std::string eow = kEndOfWord;
  for (int id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    std::string s = Symbol(id);
    if (s.size() >= eow.size() && s.compare(s.size() - eow.size(), eow.size(), eow) == 0) {
      s.resize(s.size() - eow.size());
      out += s;
      out += ' ';
    } else {
      out += s;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

const std::string& BpeVocab::Symbol(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size()) {
    throw DataError(StrCat("bpe: id ", id, " outside vocabulary of ", symbols_.size()));
  }
  return symbols_[static_cast<std::size_t>(id)];
}

}  // namespace mpc
