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


// Versioned binary container of named float64 arrays plus a JSON metadata
// block. Layout, all integers little-endian:
//
//   0   magic "MPCARRAY"
//   8   u32 format version
//   12  u32 header size (64)
//   16  u64 index offset     24  u64 index size
//   32  u64 array count      40  u64 metadata offset
//   48  u64 metadata size    56  u64 zero
//   64  array payloads, each starting on a 64-byte boundary
//   ... metadata (UTF-8 JSON), then the index table
//
// Index entry: u32 name length, name bytes, u32 rank, u64 dims[rank],
// u64 payload offset, u64 element count, u64 FNV-1a hash of the payload.

#ifndef MPC_CONTAINER_HPP_
#define MPC_CONTAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace mpc {

inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* Find(const std::string& name) const;
};

// Writes to a temporary sibling and renames it into place.
void SaveContainer(const std::filesystem::path& path, const Container& c);
// Throws CheckpointError on a bad magic, a version mismatch, truncation or a
// payload hash mismatch.
Container LoadContainer(const std::filesystem::path& path);

}  // namespace mpc

#endif  // MPC_CONTAINER_HPP_
