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

// Waveform I/O and the log-mel filterbank frontend.
//
// Per frame: periodic Hann window over window_ms of samples, zero-padded real
// FFT of fft_size points, power spectrum, triangular mel filters (HTK mel
// scale) spanning [fmin, fmax], natural log floored at log_floor.

#ifndef MPC_AUDIO_HPP_
#define MPC_AUDIO_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mpc::audio {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1)
  int sample_rate = 16000;
};

struct FrontendConfig {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 40;
  int fft_size = 512;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-10;
  // Per-utterance mean/variance normalization of each mel bin.
  bool normalize = false;

  std::size_t WindowSamples() const;
  std::size_t HopSamples() const;
  void Validate() const;
};

// T x F log-mel matrix, row-major.
struct FeatureSequence {
  std::vector<double> values;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  double frame_hop_ms = 10.0;
  std::string source_id;

  std::span<const double> Frame(std::size_t t) const {
    return std::span<const double>(values).subspan(t * num_bins, num_bins);
  }
};

// 16-bit PCM mono RIFF/WAVE. Throws DataError on anything else.
Waveform ReadWav(const std::filesystem::path& path);
// Writes 16-bit PCM mono, clipping to the representable range.
void WriteWav(const std::filesystem::path& path, const Waveform& wave);

double HzToMel(double hz);
double MelToHz(double mel);

// n_mels x (fft_size / 2 + 1) triangular filter weights, row-major.
std::vector<double> MelFilterbank(const FrontendConfig& cfg);

// floor((num_samples - window) / hop) + 1 for num_samples >= window, else 0.
std::size_t NumFrames(std::size_t num_samples, const FrontendConfig& cfg);

FeatureSequence LogMel(const Waveform& wave, const FrontendConfig& cfg,
                       std::string source_id = {});

// Linear-interpolation resampling to round(len / factor) samples; the sample
// rate is unchanged, so pitch and tempo both scale by `factor`.
Waveform SpeedPerturb(const Waveform& wave, double factor);

}  // namespace mpc::audio

#endif  // MPC_AUDIO_HPP_
