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


// Manifest-to-feature extraction with an optional on-disk cache.

#ifndef MPC_FEATURES_HPP_
#define MPC_FEATURES_HPP_

#include <filesystem>
#include <vector>

#include "mpc/audio.hpp"
#include "mpc/manifest.hpp"

namespace mpc {

// Log-mel features for every record, in manifest order, after speed
// perturbation by `speed` (1 leaves the audio untouched). Files are processed
// in parallel. With a non-empty `cache_dir`, features are stored there in the
// container format keyed by file, modification time, frontend settings and
// speed, and reused on later calls. Throws DataError naming the manifest line
// of the first failing record.
std::vector<audio::FeatureSequence> ExtractFeatures(
    const std::vector<ManifestRecord>& records, const audio::FrontendConfig& frontend,
    double speed = 1.0, const std::filesystem::path& cache_dir = {});

}  // namespace mpc

#endif  // MPC_FEATURES_HPP_
