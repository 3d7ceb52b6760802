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


// Deterministic synthetic corpora that stand in for speech datasets.
//
//   pretrain  clips of consecutive harmonic segments with random pitch and
//             three random spectral peaks
//   tag       clips whose partials all fall inside one of `classes` disjoint
//             mel-spaced bands; the band is the label
//   seq2seq   one tone burst per letter of a random string over 'a'..'p',
//             3 to 8 letters, each letter with its own pitch; the target
//             text is the letters separated by spaces

#ifndef MPC_SYNTH_HPP_
#define MPC_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mpc/audio.hpp"
#include "mpc/config.hpp"
#include "mpc/rng.hpp"

namespace mpc::synth {

inline constexpr const char* kLetters = "abcdefghijklmnop";
inline constexpr std::size_t kNumLetters = 16;

struct SynthOptions {
  TaskKind kind = TaskKind::kPretrain;
  std::size_t size = 0;      // training clips
  std::size_t dev_size = 0;  // held-out clips
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  int sample_rate = 16000;
  double min_seconds = 1.0;  // pretrain and tag clip length range
  double max_seconds = 2.0;
  std::size_t classes = 4;
  std::size_t min_letters = 3;
  std::size_t max_letters = 8;
};

struct SynthResult {
  std::filesystem::path train_manifest;
  std::filesystem::path dev_manifest;  // empty when dev_size == 0
};

// Writes <out>/wav/*.wav, <out>/train.tsv and, if requested, <out>/dev.tsv.
// Throws ConfigError for size 0 and DataError for an unwritable directory.
SynthResult GenerateCorpus(const SynthOptions& options);

// Lower and upper edge in Hz of the band used by class `cls`.
std::pair<double, double> ClassBand(std::size_t cls, std::size_t classes);
// Pitch of letter `index` (0 for 'a').
double LetterHz(std::size_t index);

audio::Waveform PretrainClip(Rng& rng, int sample_rate, double seconds);
audio::Waveform TagClip(Rng& rng, std::size_t cls, std::size_t classes, int sample_rate,
                        double seconds);
audio::Waveform LetterClip(Rng& rng, const std::vector<std::size_t>& letters,
                           int sample_rate);

}  // namespace mpc::synth

#endif  // MPC_SYNTH_HPP_
