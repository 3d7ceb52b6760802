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


// Tab-separated utterance manifests, one record per line:
//
//   pretrain:  id <TAB> audio_path
//   tag:       id <TAB> audio_path <TAB> label
//   seq2seq:   id <TAB> audio_path <TAB> text
//
// Blank lines and lines starting with '#' are skipped. Relative audio paths
// resolve against the manifest's directory.

#ifndef MPC_MANIFEST_HPP_
#define MPC_MANIFEST_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mpc/config.hpp"

namespace mpc {

struct ManifestRecord {
  std::string id;
  std::filesystem::path audio_path;
  std::string label;  // tag only
  std::string text;   // seq2seq only
  std::size_t line = 0;
};

// Throws DataError naming the manifest line on a wrong field count, a
// duplicate id, a missing audio file, or an empty manifest.
std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path,
                                         TaskKind task);

// Audio paths are written as given.
void WriteManifest(const std::filesystem::path& path, TaskKind task,
                   const std::vector<ManifestRecord>& records);

}  // namespace mpc

#endif  // MPC_MANIFEST_HPP_
