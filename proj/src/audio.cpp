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

#include "mpc/audio.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <mutex>
#include <numbers>

#include "mpc/error.hpp"

namespace mpc::audio {

using internal::StrCat;

namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& PlanMutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    out_.reset(static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    std::lock_guard<std::mutex> lock(PlanMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_.get(), out_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(PlanMutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }

  // |X_k|^2 for k in [0, n/2].
  void PowerSpectrum(std::vector<double>& power) {
    fftw_execute(plan_);
    power.resize(static_cast<std::size_t>(n_ / 2 + 1));
    for (std::size_t k = 0; k < power.size(); ++k) {
      power[k] = out_.get()[k][0] * out_.get()[k][0] +
                 out_.get()[k][1] * out_.get()[k][1];
    }
  }

 private:
  int n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_;
};

}  // namespace

std::size_t FrontendConfig::WindowSamples() const {
  return static_cast<std::size_t>(std::lround(window_ms * sample_rate / 1000.0));
}

std::size_t FrontendConfig::HopSamples() const {
  return static_cast<std::size_t>(std::lround(hop_ms * sample_rate / 1000.0));
}

void FrontendConfig::Validate() const {
  if (sample_rate <= 0) throw ConfigError("frontend: sample_rate must be > 0");
  if (!(hop_ms > 0.0) || hop_ms > window_ms) {
    throw ConfigError(StrCat("frontend: need 0 < hop_ms <= window_ms, got hop ",
                             hop_ms, " window ", window_ms));
  }
  if (n_mels < 1) throw ConfigError("frontend: n_mels must be >= 1");
  if (fft_size < 2 || static_cast<std::size_t>(fft_size) < WindowSamples()) {
    throw ConfigError(StrCat("frontend: fft_size ", fft_size,
                             " smaller than the window of ", WindowSamples(),
                             " samples"));
  }
  if (fmin < 0.0 || !(fmax > fmin) || fmax > sample_rate / 2.0) {
    throw ConfigError(StrCat("frontend: need 0 <= fmin < fmax <= nyquist, got ",
                             fmin, " and ", fmax));
  }
  if (!(log_floor > 0.0)) throw ConfigError("frontend: log_floor must be > 0");
}

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(StrCat("cannot open '", path.string(), "'"));
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError(StrCat(where, ": not a RIFF/WAVE file"));
  }
  bool have_fmt = false;
  int sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        throw DataError(StrCat(where, ": truncated fmt chunk"));
      }
      const std::uint16_t format = ReadU16(bytes.data() + body);
      const std::uint16_t channels = ReadU16(bytes.data() + body + 2);
      sample_rate = static_cast<int>(ReadU32(bytes.data() + body + 4));
      const std::uint16_t bits = ReadU16(bytes.data() + body + 14);
      bool pcm = format == 1;
      if (format == 0xFFFE && size >= 40) {
        pcm = ReadU16(bytes.data() + body + 24) == 1;  // sub-format GUID
      }
      if (!pcm) throw DataError(StrCat(where, ": not PCM (format ", format, ")"));
      if (channels != 1) {
        throw DataError(StrCat(where, ": expected mono, got ", channels,
                               " channels"));
      }
      if (bits != 16) {
        throw DataError(StrCat(where, ": expected 16-bit samples, got ", bits));
      }
      if (sample_rate <= 0) throw DataError(StrCat(where, ": bad sample rate"));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw DataError(StrCat(where, ": data chunk before fmt"));
      if (body + size > bytes.size() || size % 2 != 0) {
        throw DataError(StrCat(where, ": truncated data chunk (", size,
                               " bytes declared, ", bytes.size() - body,
                               " present)"));
      }
      Waveform w;
      w.sample_rate = sample_rate;
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(ReadU16(bytes.data() + body + 2 * i));
        w.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return w;
    }
    pos = body + size + (size & 1u);
  }
  throw DataError(StrCat(where, have_fmt ? ": no data chunk" : ": no fmt chunk"));
}

void WriteWav(const std::filesystem::path& path, const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out.append("RIFF");
  PutU32(out, 36 + 2 * n);
  out.append("WAVEfmt ");
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out.append("data");
  PutU32(out, 2 * n);
  for (double s : wave.samples) {
    const double scaled = std::round(s * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(out, static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(StrCat("cannot write '", path.string(), "'"));
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError(StrCat("short write to '", path.string(), "'"));
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> MelFilterbank(const FrontendConfig& cfg) {
  cfg.Validate();
  const std::size_t bins = static_cast<std::size_t>(cfg.fft_size / 2 + 1);
  const auto n_mels = static_cast<std::size_t>(cfg.n_mels);
  const double mel_lo = HzToMel(cfg.fmin);
  const double mel_hi = HzToMel(cfg.fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_mels + 1));
  }
  std::vector<double> weights(n_mels * bins, 0.0);
  const double hz_per_bin = static_cast<double>(cfg.sample_rate) / cfg.fft_size;
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * hz_per_bin;
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      weights[m * bins + k] = std::max(0.0, std::min(up, down));
    }
  }
  return weights;
}

std::size_t NumFrames(std::size_t num_samples, const FrontendConfig& cfg) {
  const std::size_t win = cfg.WindowSamples();
  if (num_samples < win) return 0;
  return (num_samples - win) / cfg.HopSamples() + 1;
}

FeatureSequence LogMel(const Waveform& wave, const FrontendConfig& cfg,
                       std::string source_id) {
  cfg.Validate();
  if (wave.sample_rate != cfg.sample_rate) {
    throw DataError(StrCat("log_mel: ", source_id.empty() ? "waveform" : source_id,
                           " has sample rate ", wave.sample_rate,
                           " but the frontend expects ", cfg.sample_rate));
  }
  const std::size_t win = cfg.WindowSamples();
  const std::size_t hop = cfg.HopSamples();
  if (wave.samples.size() < win) {
    throw DataError(StrCat("log_mel: ", wave.samples.size(),
                           " samples is shorter than one window (", win, ")"));
  }
  const std::size_t frames = NumFrames(wave.samples.size(), cfg);
  const auto n_mels = static_cast<std::size_t>(cfg.n_mels);
  const std::size_t bins = static_cast<std::size_t>(cfg.fft_size / 2 + 1);
  const std::vector<double> fb = MelFilterbank(cfg);

  std::vector<double> window(win);
  for (std::size_t i = 0; i < win; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                     static_cast<double>(i) /
                                     static_cast<double>(win));
  }

  FeatureSequence out;
  out.num_frames = frames;
  out.num_bins = n_mels;
  out.frame_hop_ms = cfg.hop_ms;
  out.source_id = std::move(source_id);
  out.values.resize(frames * n_mels);

  RealFft fft(cfg.fft_size);
  std::vector<double> power;
  const double log_floor = std::log(cfg.log_floor);
  for (std::size_t t = 0; t < frames; ++t) {
    double* in = fft.input();
    const double* src = wave.samples.data() + t * hop;
    for (std::size_t i = 0; i < win; ++i) in[i] = src[i] * window[i];
    std::fill(in + win, in + cfg.fft_size, 0.0);
    fft.PowerSpectrum(power);
    for (std::size_t m = 0; m < n_mels; ++m) {
      double energy = 0.0;
      for (std::size_t k = 0; k < bins; ++k) energy += fb[m * bins + k] * power[k];
      out.values[t * n_mels + m] =
          energy > cfg.log_floor ? std::log(energy) : log_floor;
    }
  }

  if (cfg.normalize) {
    for (std::size_t m = 0; m < n_mels; ++m) {
      double mean = 0.0;
      for (std::size_t t = 0; t < frames; ++t) mean += out.values[t * n_mels + m];
      mean /= static_cast<double>(frames);
      double var = 0.0;
      for (std::size_t t = 0; t < frames; ++t) {
        const double d = out.values[t * n_mels + m] - mean;
        var += d * d;
      }
      const double inv = 1.0 / std::sqrt(var / static_cast<double>(frames) + 1e-10);
      for (std::size_t t = 0; t < frames; ++t) {
        out.values[t * n_mels + m] = (out.values[t * n_mels + m] - mean) * inv;
      }
    }
  }
  return out;
}

Waveform SpeedPerturb(const Waveform& wave, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(StrCat("speed_perturb: factor must be > 0, got ", factor));
  }
  Waveform out;
  out.sample_rate = wave.sample_rate;
  const std::size_t n = wave.samples.size();
  const auto len = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) / factor));
  out.samples.resize(len);
  if (n == 0) return out;
  for (std::size_t i = 0; i < len; ++i) {
    const double pos = static_cast<double>(i) * factor;
    std::size_t idx = static_cast<std::size_t>(pos);
    if (idx >= n - 1) {
      out.samples[i] = wave.samples[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(idx);
    out.samples[i] = wave.samples[idx] * (1.0 - frac) + wave.samples[idx + 1] * frac;
  }
  return out;
}

}  // namespace mpc::audio
