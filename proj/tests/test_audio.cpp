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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "doctest.h"
#include "mpc/audio.hpp"
#include "mpc/error.hpp"
#include "mpc/rng.hpp"

namespace mpc::audio {
namespace {

namespace fs = std::filesystem;

Waveform Tone(double hz, std::size_t n, double amp = 0.5) {
  Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
  }
  return w;
}

fs::path TempPath(const std::string& name) {
  return fs::temp_directory_path() / ("mpc_test_audio_" + name);
}

void WriteBytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string ReadBytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

TEST_CASE("read_wav: silence and full-scale square wave") {
  const fs::path p = TempPath("silence.wav");
  WriteWav(p, Waveform{std::vector<double>(16000, 0.0), 16000});
  const Waveform w = ReadWav(p);
  CHECK(w.sample_rate == 16000);
  REQUIRE(w.samples.size() == 16000);
  for (double s : w.samples) REQUIRE(s == 0.0);

  Waveform sq;
  for (int i = 0; i < 64; ++i) sq.samples.push_back(i % 8 < 4 ? 1.0 : -1.0);
  const fs::path q = TempPath("square.wav");
  WriteWav(q, sq);
  const Waveform r = ReadWav(q);
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    CHECK(r.samples[i] == (i % 8 < 4 ? 32767.0 / 32768.0 : -1.0));
  }
  fs::remove(p);
  fs::remove(q);
}

TEST_CASE("read_wav: malformed files are rejected") {
  const fs::path p = TempPath("good.wav");
  WriteWav(p, Tone(440, 1000));
  const std::string good = ReadBytes(p);

  SUBCASE("truncated data") {
    WriteBytes(p, good.substr(0, good.size() - 100));
    CHECK_THROWS_AS(ReadWav(p), DataError);
  }
  SUBCASE("stereo") {
    std::string bad = good;
    bad[22] = 2;
    WriteBytes(p, bad);
    CHECK_THROWS_WITH_AS(ReadWav(p), doctest::Contains("mono"), DataError);
  }
  SUBCASE("non-pcm") {
    std::string bad = good;
    bad[20] = 3;
    WriteBytes(p, bad);
    CHECK_THROWS_WITH_AS(ReadWav(p), doctest::Contains("PCM"), DataError);
  }
  SUBCASE("not riff") {
    WriteBytes(p, "hello world, this is not audio");
    CHECK_THROWS_AS(ReadWav(p), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(ReadWav(TempPath("does_not_exist.wav")), DataError);
  }
  fs::remove(p);
}

TEST_CASE("log_mel: sample rate mismatch is an error") {
  Waveform w = Tone(440, 8000);
  w.sample_rate = 8000;
  CHECK_THROWS_WITH_AS(LogMel(w, FrontendConfig{}), doctest::Contains("8000"), DataError);
}

TEST_CASE("log_mel: 16000 samples give 98 frames of 40 bins") {
  const FeatureSequence f = LogMel(Tone(440, 16000), FrontendConfig{});
  CHECK(f.num_frames == 98);
  CHECK(f.num_bins == 40);
  CHECK(f.values.size() == 98 * 40);
}

TEST_CASE("log_mel: silence is the log floor everywhere") {
  const FrontendConfig cfg;
  const FeatureSequence f = LogMel(Waveform{std::vector<double>(4000, 0.0), 16000}, cfg);
  for (double v : f.values) REQUIRE(v == std::log(1e-10));
}

TEST_CASE("log_mel: 440 Hz tone peaks in the filter covering 440 Hz") {
  // Independent break-point computation: filter m spans mel points m..m+2 of
  // n_mels + 2 equally spaced points on [0, mel(8000)].
  const double mel_max = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  const double spacing = mel_max / 41.0;
  const double mel440 = 2595.0 * std::log10(1.0 + 440.0 / 700.0);
  int expected = -1;
  double best = -1.0;
  for (int m = 0; m < 40; ++m) {
    const double c = (m + 1) * spacing;
    const double w = 1.0 - std::fabs(mel440 - c) / spacing;
    if (w > best) {
      best = w;
      expected = m;
    }
  }
  REQUIRE(expected == 7);

  const FeatureSequence f = LogMel(Tone(440, 16000), FrontendConfig{});
  for (std::size_t t = 0; t < f.num_frames; ++t) {
    const auto row = f.Frame(t);
    const auto it = std::max_element(row.begin(), row.end());
    REQUIRE(static_cast<int>(it - row.begin()) == expected);
  }
}

TEST_CASE("log_mel: frame count formula over random lengths") {
  const FrontendConfig cfg;
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 400 + rng.UniformInt(6000);
    Waveform w;
    w.samples.resize(n);
    for (double& s : w.samples) s = rng.Uniform(-0.5, 0.5);
    const FeatureSequence f = LogMel(w, cfg);
    REQUIRE(f.num_frames == (n - 400) / 160 + 1);
    for (double v : f.values) REQUIRE(v >= std::log(cfg.log_floor));
  }
  CHECK_THROWS_AS(LogMel(Waveform{std::vector<double>(399, 0.1), 16000}, cfg), DataError);
}

TEST_CASE("log_mel: deterministic bit for bit") {
  Rng rng(3);
  Waveform w;
  w.samples.resize(5000);
  for (double& s : w.samples) s = rng.Uniform(-1.0, 1.0);
  const FeatureSequence a = LogMel(w, FrontendConfig{});
  const FeatureSequence b = LogMel(w, FrontendConfig{});
  CHECK(a.values == b.values);
}

TEST_CASE("filterbank: rows positive, bins covered") {
  const FrontendConfig cfg;
  const std::vector<double> fb = MelFilterbank(cfg);
  const std::size_t bins = 257;
  REQUIRE(fb.size() == 40 * bins);
  for (std::size_t m = 0; m < 40; ++m) {
    double sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      REQUIRE(fb[m * bins + k] >= 0.0);
      sum += fb[m * bins + k];
    }
    CHECK(sum > 0.0);
  }
  // DC and Nyquist sit on the outer edges of the first and last triangles;
  // every interior bin carries positive weight.
  for (std::size_t k = 1; k + 1 < bins; ++k) {
    double col = 0.0;
    for (std::size_t m = 0; m < 40; ++m) col += fb[m * bins + k];
    REQUIRE(col > 0.0);
  }
  CHECK(MelToHz(HzToMel(0.0)) == 0.0);
  CHECK(MelToHz(HzToMel(8000.0)) == doctest::Approx(8000.0).epsilon(1e-12));
}

TEST_CASE("frontend config validation") {
  FrontendConfig cfg;
  cfg.hop_ms = 30;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = FrontendConfig{};
  cfg.n_mels = 0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = FrontendConfig{};
  cfg.fft_size = 256;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
}

TEST_CASE("speed_perturb: lengths and identity") {
  const Waveform w = Tone(300, 16000);
  CHECK(SpeedPerturb(w, 0.9).samples.size() == 17778);
  CHECK(SpeedPerturb(w, 1.1).samples.size() == 14545);
  CHECK(SpeedPerturb(w, 1.0).samples == w.samples);
  CHECK(SpeedPerturb(w, 0.9).sample_rate == 16000);
  CHECK_THROWS_AS(SpeedPerturb(w, 0.0), Error);
  CHECK_THROWS_AS(SpeedPerturb(w, -1.0), Error);
}

TEST_CASE("speed_perturb: round trip length within one sample") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Waveform w;
    w.samples.assign(100 + rng.UniformInt(20000), 0.25);
    const double f = rng.Uniform(0.5, 2.0);
    const Waveform back = SpeedPerturb(SpeedPerturb(w, f), 1.0 / f);
    const auto diff = static_cast<long>(back.samples.size()) - static_cast<long>(w.samples.size());
    REQUIRE(std::labs(diff) <= 1);
  }
}

}  // namespace
}  // namespace mpc::audio
