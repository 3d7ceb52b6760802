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


#include "mpc/manifest.hpp"

#include <fstream>
#include <map>

#include "mpc/error.hpp"

namespace mpc {

using internal::StrCat;

namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path,
                                         TaskKind task) {
  std::ifstream in(path);
  if (!in) throw DataError(StrCat("manifest: cannot read ", path.string()));
  const std::size_t fields = task == TaskKind::kPretrain ? 2 : 3;
  const auto base = std::filesystem::absolute(path).parent_path();
  std::vector<ManifestRecord> out;
  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto where = [&] { return StrCat(path.string(), ":", lineno, ": "); };
    const auto cols = SplitTabs(line);
    if (cols.size() != fields) {
      throw DataError(StrCat(where(), "expected ", fields, " tab-separated fields for task ",
                             TaskName(task), ", found ", cols.size()));
    }
    ManifestRecord r;
    r.id = cols[0];
    r.line = lineno;
    if (r.id.empty()) throw DataError(StrCat(where(), "empty utterance id"));
    if (const auto it = seen.find(r.id); it != seen.end()) {
      throw DataError(StrCat(where(), "duplicate id '", r.id, "' (first on line ",
                             it->second, ")"));
    }
    seen.emplace(r.id, lineno);
    std::filesystem::path audio(cols[1]);
    r.audio_path = audio.is_relative() ? (base / audio).lexically_normal() : audio;
    if (!std::filesystem::is_regular_file(r.audio_path)) {
      throw DataError(StrCat(where(), "audio file not found: ", r.audio_path.string()));
    }
    if (task == TaskKind::kTag) {
      r.label = cols[2];
      if (r.label.empty()) throw DataError(StrCat(where(), "empty label"));
    } else if (task == TaskKind::kSeq2Seq) {
      r.text = cols[2];
      if (r.text.find_first_not_of(' ') == std::string::npos) {
        throw DataError(StrCat(where(), "empty target text"));
      }
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw DataError(StrCat("manifest: no records in ", path.string()));
  return out;
}

void WriteManifest(const std::filesystem::path& path, TaskKind task,
                   const std::vector<ManifestRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(StrCat("manifest: cannot write ", path.string()));
  for (const auto& r : records) {
    out << r.id << '\t' << r.audio_path.string();
    if (task == TaskKind::kTag) out << '\t' << r.label;
    if (task == TaskKind::kSeq2Seq) out << '\t' << r.text;
    out << '\n';
  }
  if (!out) throw DataError(StrCat("manifest: write failed for ", path.string()));
}

}  // namespace mpc
