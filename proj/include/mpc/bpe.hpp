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


// Byte pair encoding over whitespace-separated words.
//
// Words are split into bytes; the last byte of each word carries the
// end-of-word marker "</w>". The base alphabet holds every training byte in
// both its word-internal and word-final form. Merges are learned greedily by
// pair frequency, ties broken by the lexicographically smaller pair.

#ifndef MPC_BPE_HPP_
#define MPC_BPE_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mpc {

class BpeVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecial = 4;
  static constexpr const char* kEndOfWord = "</w>";

  BpeVocab() = default;

  // Learns merges until the vocabulary (specials included) reaches
  // `target_size` or no pair occurs more than once.
  static BpeVocab Train(const std::vector<std::string>& corpus,
                        std::size_t target_size);
  static BpeVocab FromJson(const std::string& json);
  std::string ToJson() const;

  // Whitespace-separated words to ids; bytes outside the alphabet map to kUnk.
  std::vector<int> Encode(const std::string& text) const;
  // Joins words with single spaces; special ids other than kUnk are skipped.
  std::string Decode(const std::vector<int>& ids) const;

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::pair<std::string, std::string>>& merges() const {
    return merges_;
  }
  const std::string& Symbol(int id) const;

 private:
  void Build();
  std::vector<std::string> SegmentWord(const std::string& word) const;

  std::vector<std::string> base_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::vector<std::string> symbols_;
  std::map<std::string, int> ids_;
  std::map<std::pair<std::string, std::string>, std::size_t> ranks_;
};

// Splits on ASCII whitespace, dropping empty fields.
std::vector<std::string> SplitWords(const std::string& text);

}  // namespace mpc

#endif  // MPC_BPE_HPP_
