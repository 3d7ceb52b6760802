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


#include "mpc/features.hpp"

#include <charconv>
#include <cstdio>
#include <cstdint>
#include <string>

#include "mpc/container.hpp"
#include "mpc/error.hpp"

namespace mpc {

using internal::StrCat;

namespace {

std::string Num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string CacheKey(const ManifestRecord& r, const audio::FrontendConfig& f,
                     double speed) {
  const auto size = std::filesystem::file_size(r.audio_path);
  const auto mtime = std::filesystem::last_write_time(r.audio_path).time_since_epoch().count();
  return StrCat(std::filesystem::absolute(r.audio_path).string(), "|", size, "|", mtime, "|",
                f.sample_rate, "|", Num(f.window_ms), "|", Num(f.hop_ms), "|", f.n_mels, "|",
                f.fft_size, "|", Num(f.fmin), "|", Num(f.fmax), "|", Num(f.log_floor), "|",
                f.normalize, "|", Num(speed));
}

std::string HexHash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool TryLoadCached(const std::filesystem::path& file, const std::string& key,
                   audio::FeatureSequence& out) {
  if (!std::filesystem::is_regular_file(file)) return false;
  try {
    Container c = LoadContainer(file);
    const NamedArray* a = c.Find("features");
    if (c.meta.value("kind", "") != "features" || c.meta.value("key", "") != key || !a ||
        a->shape.size() != 2) {
      return false;
    }
    out.num_frames = a->shape[0];
    out.num_bins = a->shape[1];
    out.values = a->values;
    out.frame_hop_ms = c.meta.at("frame_hop_ms").get<double>();
    return true;
  } catch (const Error&) {
    return false;
  }
}

audio::FeatureSequence ExtractOne(const ManifestRecord& r, const audio::FrontendConfig& f,
                                  double speed, const std::filesystem::path& cache_dir) {
  std::string key;
  std::filesystem::path cached;
  audio::FeatureSequence seq;
  if (!cache_dir.empty()) {
    key = CacheKey(r, f, speed);
    cached = cache_dir / (HexHash(key) + ".feat");
    if (TryLoadCached(cached, key, seq)) {
      seq.source_id = r.id;
      return seq;
    }
  }
  audio::Waveform wave = audio::ReadWav(r.audio_path);
  if (speed != 1.0) wave = audio::SpeedPerturb(wave, speed);
  seq = audio::LogMel(wave, f, r.id);
  if (!cache_dir.empty()) {
    Container c;
    c.meta = {{"kind", "features"}, {"key", key}, {"frame_hop_ms", seq.frame_hop_ms}};
    c.arrays.push_back({"features", {seq.num_frames, seq.num_bins}, seq.values});
    SaveContainer(cached, c);
  }
  return seq;
}

}  // namespace

std::vector<audio::FeatureSequence> ExtractFeatures(
    const std::vector<ManifestRecord>& records, const audio::FrontendConfig& frontend,
    double speed, const std::filesystem::path& cache_dir) {
  frontend.Validate();
  if (!cache_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    if (ec) {
      throw DataError(StrCat("feature cache: cannot create ", cache_dir.string(), ": ",
                             ec.message()));
    }
  }
  std::vector<audio::FeatureSequence> out(records.size());
  std::vector<std::string> errors(records.size());
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] = ExtractOne(r, frontend, speed, cache_dir);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = StrCat("line ", r.line, " (", r.id, "): ", e.what());
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError(StrCat("features: ", e));
  }
  return out;
}

}  // namespace mpc
