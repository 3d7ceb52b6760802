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


#include "mpc/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "mpc/error.hpp"
#include "mpc/manifest.hpp"

namespace mpc::synth {

using internal::StrCat;

namespace {

constexpr double kNoise = 0.005;
constexpr double kQuietNoise = 0.0002;
constexpr double kBandLowHz = 250.0;
constexpr double kBandHighHz = 6000.0;

// Adds a sinusoid with raised-cosine ramps over [start, start + len).
void AddTone(std::vector<double>& x, int sr, std::size_t start, std::size_t len,
             double hz, double amp, double phase) {
  const std::size_t ramp = std::min<std::size_t>(len / 2, static_cast<std::size_t>(sr / 100));
  for (std::size_t i = 0; i < len && start + i < x.size(); ++i) {
    double env = 1.0;
    if (ramp > 0 && i < ramp) env = 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
    if (ramp > 0 && len - 1 - i < ramp) {
      env = 0.5 - 0.5 * std::cos(std::numbers::pi * (len - 1 - i) / ramp);
    }
    x[start + i] += amp * env *
                    std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr + phase);
  }
}

void AddNoise(std::vector<double>& x, Rng& rng, double amp = kNoise) {
  for (double& v : x) v += amp * rng.Uniform(-1.0, 1.0);
}

std::size_t Samples(double seconds, int sr) {
  return static_cast<std::size_t>(std::lround(seconds * sr));
}

std::string Id(TaskKind kind, const char* split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", i);
  return StrCat(TaskName(kind), "-", split, "-", buf);
}

std::vector<ManifestRecord> WriteSplit(const SynthOptions& o, Rng& rng, const char* split,
                                       std::size_t count) {
  std::vector<ManifestRecord> records;
  for (std::size_t i = 0; i < count; ++i) {
    ManifestRecord r;
    r.id = Id(o.kind, split, i);
    r.audio_path = std::filesystem::path("wav") / (r.id + ".wav");
    audio::Waveform w;
    const double seconds = rng.Uniform(o.min_seconds, o.max_seconds);
    switch (o.kind) {
      case TaskKind::kPretrain:
        w = PretrainClip(rng, o.sample_rate, seconds);
        break;
      case TaskKind::kTag: {
        const std::size_t cls = i % o.classes;
        w = TagClip(rng, cls, o.classes, o.sample_rate, seconds);
        r.label = StrCat("class", cls);
        break;
      }
      case TaskKind::kSeq2Seq: {
        const std::size_t n = o.min_letters + rng.UniformInt(o.max_letters - o.min_letters + 1);
        std::vector<std::size_t> letters(n);
        for (auto& l : letters) l = rng.UniformInt(kNumLetters);
        w = LetterClip(rng, letters, o.sample_rate);
        for (std::size_t k = 0; k < n; ++k) {
          if (k) r.text += ' ';
          r.text += kLetters[letters[k]];
        }
        break;
      }
    }
    audio::WriteWav(o.out_dir / r.audio_path, w);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

std::pair<double, double> ClassBand(std::size_t cls, std::size_t classes) {
  // 2 * classes equal mel segments; classes take the odd ones so that
  // neighbouring bands are separated by a gap of the same width.
  const double lo = audio::HzToMel(kBandLowHz);
  const double hi = audio::HzToMel(kBandHighHz);
  const double seg = (hi - lo) / static_cast<double>(2 * classes);
  const double a = lo + seg * static_cast<double>(2 * cls + 1) - seg * 0.5;
  return {audio::MelToHz(a), audio::MelToHz(a + seg)};
}

double LetterHz(std::size_t index) {
  const double lo = audio::HzToMel(300.0);
  const double hi = audio::HzToMel(5000.0);
  return audio::MelToHz(lo + (hi - lo) * static_cast<double>(index) /
                                 static_cast<double>(kNumLetters - 1));
}

audio::Waveform PretrainClip(Rng& rng, int sample_rate, double seconds) {
  audio::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(Samples(seconds, sample_rate), 0.0);
  const double nyquist = 0.5 * sample_rate;
  std::size_t pos = 0;
  while (pos < w.samples.size()) {
    const std::size_t len = Samples(rng.Uniform(0.3, 0.8), sample_rate);
    const double f0 = rng.Uniform(100.0, 300.0);
    double formants[3];
    for (double& f : formants) {
      f = audio::MelToHz(rng.Uniform(audio::HzToMel(kBandLowHz), audio::HzToMel(kBandHighHz)));
    }
    const double level = rng.Uniform(0.1, 0.3);
    for (double h = f0; h < 0.95 * nyquist; h += f0) {
      double gain = 0.2;
      for (double f : formants) {
        const double d = std::log2(h / f) / 0.25;
        gain += std::exp(-0.5 * d * d);
      }
      AddTone(w.samples, sample_rate, pos, len, h, level * gain / 8.0,
              rng.Uniform(0.0, 2.0 * std::numbers::pi));
    }
    pos += len;
  }
  AddNoise(w.samples, rng, kQuietNoise);
  return w;
}

audio::Waveform TagClip(Rng& rng, std::size_t cls, std::size_t classes, int sample_rate,
                        double seconds) {
  if (cls >= classes) throw Error(StrCat("synth: class ", cls, " out of range"));
  audio::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(Samples(seconds, sample_rate), 0.0);
  const auto [lo, hi] = ClassBand(cls, classes);
  const std::size_t partials = 2 + rng.UniformInt(2);
  for (std::size_t p = 0; p < partials; ++p) {
    const std::size_t len = Samples(rng.Uniform(0.5, 1.0) * seconds, sample_rate);
    const std::size_t start = rng.UniformInt(w.samples.size() - len + 1);
    AddTone(w.samples, sample_rate, start, len,
            audio::MelToHz(rng.Uniform(audio::HzToMel(lo), audio::HzToMel(hi))),
            rng.Uniform(0.1, 0.25), rng.Uniform(0.0, 2.0 * std::numbers::pi));
  }
  AddNoise(w.samples, rng);
  return w;
}

audio::Waveform LetterClip(Rng& rng, const std::vector<std::size_t>& letters,
                           int sample_rate) {
  audio::Waveform w;
  w.sample_rate = sample_rate;
  const std::size_t burst = Samples(0.12, sample_rate);
  const std::size_t gap = Samples(0.04, sample_rate);
  const std::size_t lead = Samples(rng.Uniform(0.05, 0.15), sample_rate);
  const std::size_t tail = Samples(rng.Uniform(0.05, 0.15), sample_rate);
  w.samples.assign(lead + letters.size() * (burst + gap) + tail, 0.0);
  std::size_t pos = lead;
  for (std::size_t l : letters) {
    if (l >= kNumLetters) throw Error(StrCat("synth: letter ", l, " out of range"));
    AddTone(w.samples, sample_rate, pos, burst, LetterHz(l), rng.Uniform(0.2, 0.4),
            rng.Uniform(0.0, 2.0 * std::numbers::pi));
    pos += burst + gap;
  }
  AddNoise(w.samples, rng);
  return w;
}

SynthResult GenerateCorpus(const SynthOptions& o) {
  if (o.size == 0) throw ConfigError("synth-data: size must be positive");
  if (o.kind == TaskKind::kTag && o.classes < 2) {
    throw ConfigError("synth-data: tagging needs at least 2 classes");
  }
  if (!(o.min_seconds > 0.05 && o.max_seconds >= o.min_seconds)) {
    throw ConfigError("synth-data: need 0.05 < min_seconds <= max_seconds");
  }
  if (o.min_letters < 1 || o.max_letters < o.min_letters) {
    throw ConfigError("synth-data: need 1 <= min_letters <= max_letters");
  }
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir / "wav", ec);
  if (ec) {
    throw DataError(StrCat("synth-data: cannot create ", (o.out_dir / "wav").string(), ": ",
                           ec.message()));
  }
  Rng master(o.seed);
  Rng train_rng = master.Fork();
  Rng dev_rng = master.Fork();
  SynthResult result;
  result.train_manifest = o.out_dir / "train.tsv";
  WriteManifest(result.train_manifest, o.kind, WriteSplit(o, train_rng, "train", o.size));
  if (o.dev_size > 0) {
    result.dev_manifest = o.out_dir / "dev.tsv";
    WriteManifest(result.dev_manifest, o.kind, WriteSplit(o, dev_rng, "dev", o.dev_size));
  }
  return result;
}

}  // namespace mpc::synth
