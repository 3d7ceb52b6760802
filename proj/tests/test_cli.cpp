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


#include <sys/wait.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <fstream>
#include <iterator>
#include <limits>

#include "doctest.h"
#include "mpc/checkpoint.hpp"
#include "mpc/commands.hpp"
#include "mpc/config.hpp"
#include "mpc/container.hpp"
#include "mpc/error.hpp"
#include "mpc/features.hpp"
#include "mpc/manifest.hpp"
#include "mpc/synth.hpp"

namespace mpc {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mpc_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string ReadBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteText(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::string ErrorText(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

TEST_CASE("config: documented defaults") {
  const RunConfig c = RunConfig::Defaults(TaskKind::kPretrain);
  CHECK(c.model.d_model == 256);
  CHECK(c.model.ffn == 2048);
  CHECK(c.model.heads == 4);
  CHECK(c.model.dropout == 0.1);
  CHECK(c.model.enc_layers == 12);
  CHECK(c.model.dec_layers == 6);
  CHECK(c.train.mask_rate == 0.15);
  CHECK(c.train.label_smoothing == 0.1);
  CHECK(c.train.beam == 10);
  CHECK(c.train.batch_size == 256);
  CHECK(c.train.epochs == 50);
  CHECK(c.train.average_best == 5);
  CHECK(c.schedule.k == 0.5);
  CHECK(c.schedule.warmup_n == 8000);
  CHECK(c.frontend.n_mels == 40);
  const RunConfig s = RunConfig::Defaults(TaskKind::kSeq2Seq);
  CHECK(s.schedule.k == 2.5);
  CHECK(s.schedule.warmup_n == 25000);
}

TEST_CASE("config: shipped examples load and round trip") {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(MPC_CONFIG_DIR)) {
    if (e.path().extension() != ".ini") continue;
    CAPTURE(e.path().string());
    const RunConfig c = RunConfig::FromIniFile(e.path());
    CHECK_NOTHROW(c.Validate(false));
    CHECK(RunConfig::FromIniString(c.ToIni(), e.path().parent_path()).ToIni() == c.ToIni());
    ++n;
  }
  CHECK(n == 7);
  const RunConfig st = RunConfig::FromIniFile(fs::path(MPC_CONFIG_DIR) / "full_translation.ini");
  CHECK(st.speed_factors == std::vector<double>{0.9, 1.1});
  CHECK(st.schedule.k == 2.5);
  CHECK(st.schedule.warmup_n == 25000);
  CHECK(st.train.bpe_vocab_size == 8000);
}

TEST_CASE("config: parse, round trip and field errors") {
  const std::string text =
      "# comment\n[task]\nkind = tag\nseed = 42\n[model]\nd_model = 32\nheads = 2\n"
      "[schedule]\nk = 0.3\n[frontend]\nspeed_factors = 0.9, 1.1\n"
      "[paths]\ntrain_manifest = data/train.tsv\nout_dir = /abs/out\n";
  const RunConfig c = RunConfig::FromIniString(text, "/base");
  CHECK(c.task == TaskKind::kTag);
  CHECK(c.seed == 42);
  CHECK(c.model.d_model == 32);
  CHECK(c.schedule.d_model == 32);
  CHECK(c.schedule.k == 0.3);
  CHECK(c.speed_factors == std::vector<double>{0.9, 1.1});
  CHECK(c.paths.train_manifest == fs::path("/base/data/train.tsv"));
  CHECK(c.paths.out_dir == fs::path("/abs/out"));
  CHECK(RunConfig::FromIniString(c.ToIni()).ToIni() == c.ToIni());

  const std::string base = "[paths]\ntrain_manifest = t.tsv\n";
  auto err = [&](const std::string& extra) {
    return ErrorText([&] { RunConfig::FromIniString(base + extra); });
  };
  CHECK(err("[model]\nd_model = abc\n").find("model.d_model") != std::string::npos);
  CHECK(err("[model]\nwidth = 3\n").find("model.width: unknown key") != std::string::npos);
  CHECK(err("[task]\nkind = asr\n").find("task.kind") != std::string::npos);
  CHECK(err("[train]\nmask_rate = 1.5\n").find("train.mask_rate") != std::string::npos);
  CHECK(err("[model]\nd_model = 30\nheads = 4\n").find("model") != std::string::npos);
  CHECK_THROWS_AS(RunConfig::FromIniString("[task]\nkind = tag\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::FromIniString(base + "[train]\nbeam = -1\n"), ConfigError);

  const RunConfig missing = RunConfig::FromIniString(base, "/nonexistent");
  CHECK(ErrorText([&] { missing.Validate(true); }).find("paths.train_manifest") !=
        std::string::npos);
}

TEST_CASE("manifest: fields, duplicates and missing audio") {
  const fs::path dir = TempDir("manifest");
  audio::WriteWav(dir / "a.wav", audio::Waveform{std::vector<double>(800, 0.0), 16000});
  WriteText(dir / "ok.tsv", "# header\nu1\ta.wav\tcat\n\nu2\ta.wav\tdog\n");
  const auto recs = ReadManifest(dir / "ok.tsv", TaskKind::kTag);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].audio_path == dir / "a.wav");
  CHECK(recs[1].label == "dog");
  CHECK(recs[1].line == 4);

  WriteText(dir / "dup.tsv", "u1\ta.wav\tcat\nu2\ta.wav\tcat\nu1\ta.wav\tdog\n");
  const std::string dup = ErrorText([&] { ReadManifest(dir / "dup.tsv", TaskKind::kTag); });
  CHECK(dup.find(":3:") != std::string::npos);
  CHECK(dup.find("line 1") != std::string::npos);
  CHECK(dup.find("duplicate id 'u1'") != std::string::npos);

  WriteText(dir / "fields.tsv", "u1\ta.wav\n");
  CHECK_THROWS_AS(ReadManifest(dir / "fields.tsv", TaskKind::kTag), DataError);
  CHECK_NOTHROW(ReadManifest(dir / "fields.tsv", TaskKind::kPretrain));
  WriteText(dir / "missing.tsv", "u1\ta.wav\nu2\tb.wav\n");
  const std::string miss = ErrorText([&] { ReadManifest(dir / "missing.tsv", TaskKind::kPretrain); });
  CHECK(miss.find("missing.tsv:2:") != std::string::npos);
  WriteText(dir / "empty.tsv", "# nothing\n");
  CHECK_THROWS_AS(ReadManifest(dir / "empty.tsv", TaskKind::kPretrain), DataError);
  fs::remove_all(dir);
}

TEST_CASE("container: bit-exact round trip, alignment, version and corruption") {
  const fs::path dir = TempDir("container");
  Container c;
  c.meta = {{"note", "x"}, {"pi", 3.141592653589793}};
  const double special[] = {0.0, -0.0, std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::denorm_min(), 1.0 / 3.0, -1e308};
  c.arrays.push_back({"special", {7}, {std::begin(special), std::end(special)}});
  c.arrays.push_back({"empty", {0, 3}, {}});
  c.arrays.push_back({"odd", {3}, {1.5, 2.5, 3.5}});
  SaveContainer(dir / "c.bin", c);
  const Container r = LoadContainer(dir / "c.bin");
  CHECK(r.meta == c.meta);
  REQUIRE(r.arrays.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.arrays[i].name == c.arrays[i].name);
    CHECK(r.arrays[i].shape == c.arrays[i].shape);
    REQUIRE(r.arrays[i].values.size() == c.arrays[i].values.size());
    for (std::size_t j = 0; j < c.arrays[i].values.size(); ++j) {
      CHECK(std::bit_cast<std::uint64_t>(r.arrays[i].values[j]) ==
            std::bit_cast<std::uint64_t>(c.arrays[i].values[j]));
    }
  }
  std::string bytes = ReadBytes(dir / "c.bin");
  CHECK(bytes.substr(0, 8) == "MPCARRAY");
  // The third array follows an odd-sized first one and must start aligned.
  CHECK(bytes.find(std::string("\0\0\0\0\0\0\xf8\x3f", 8)) % 64 == 0);

  std::string bumped = bytes;
  bumped[8] = 2;
  WriteText(dir / "v2.bin", bumped);
  CHECK(ErrorText([&] { LoadContainer(dir / "v2.bin"); }).find("version 2") != std::string::npos);
  std::string flipped = bytes;
  flipped[64] ^= 1;
  WriteText(dir / "flip.bin", flipped);
  CHECK_THROWS_AS(LoadContainer(dir / "flip.bin"), CheckpointError);
  WriteText(dir / "short.bin", bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(LoadContainer(dir / "short.bin"), CheckpointError);
  WriteText(dir / "junk.bin", "hello");
  CHECK_THROWS_AS(LoadContainer(dir / "junk.bin"), CheckpointError);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint: round trip and configuration diff") {
  const fs::path dir = TempDir("checkpoint");
  model::ModelConfig m;
  m.d_model = 16;
  m.ffn = 32;
  m.heads = 2;
  m.enc_layers = 1;
  m.n_classes = 3;
  Rng rng(1);
  Checkpoint c;
  c.config_ini = "[task]\nkind = tag\n";
  c.head = model::HeadKind::kTagging;
  c.model = m;
  c.params = model::InitParameters(m, c.head, rng);
  c.has_optimizer = true;
  c.adam.t = 7;
  for (const auto& [name, t] : c.params) {
    c.adam.m[name] = std::vector<double>(t.numel(), 0.25);
    c.adam.v[name] = std::vector<double>(t.numel(), 1e-9);
  }
  c.step = 123;
  c.score = 0.875;
  c.score_metric = "dev_uar";
  c.classes = {"a", "b", "c"};
  SaveCheckpoint(dir / "c.ckpt", c);
  const Checkpoint r = LoadCheckpoint(dir / "c.ckpt");
  CHECK(r.config_ini == c.config_ini);
  CHECK(r.head == c.head);
  CHECK(DiffModelConfig(m, r.model).empty());
  CHECK(r.step == 123);
  CHECK(r.score == 0.875);
  CHECK(r.classes == c.classes);
  CHECK(r.adam.t == 7);
  CHECK(r.adam.m == c.adam.m);
  CHECK(r.adam.v == c.adam.v);
  REQUIRE(r.params.size() == c.params.size());
  for (const auto& [name, t] : c.params) {
    const auto a = t.data();
    const auto b = r.params.Get(name).data();
    CHECK(r.params.Get(name).shape() == t.shape());
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end(), [](double x, double y) {
      return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
    }));
  }
  SaveCheckpoint(dir / "c2.ckpt", r);
  CHECK(ReadBytes(dir / "c.ckpt") == ReadBytes(dir / "c2.ckpt"));

  model::ModelConfig other = m;
  other.d_model = 32;
  other.enc_layers = 2;
  const std::string diff = ErrorText([&] { RequireModelConfig(r, other); });
  CHECK(diff.find("model.d_model: expected 32, found 16") != std::string::npos);
  CHECK(diff.find("model.enc_layers: expected 2, found 1") != std::string::npos);
  CHECK_THROWS_AS(RequireModelConfig(r, other), CheckpointError);
  CHECK_NOTHROW(RequireModelConfig(r, m));
  fs::remove_all(dir);
}

TEST_CASE("synth: deterministic corpora and argument errors") {
  const fs::path a = TempDir("synth_a"), b = TempDir("synth_b");
  for (auto kind : {TaskKind::kPretrain, TaskKind::kTag, TaskKind::kSeq2Seq}) {
    synth::SynthOptions o;
    o.kind = kind;
    o.size = 6;
    o.dev_size = 2;
    o.seed = 9;
    o.out_dir = a;
    const auto ra = synth::GenerateCorpus(o);
    o.out_dir = b;
    const auto rb = synth::GenerateCorpus(o);
    CHECK(ReadBytes(ra.train_manifest) == ReadBytes(rb.train_manifest));
    CHECK(ReadBytes(ra.dev_manifest) == ReadBytes(rb.dev_manifest));
    for (const auto& r : ReadManifest(ra.train_manifest, kind)) {
      CHECK(ReadBytes(r.audio_path) == ReadBytes(b / "wav" / r.audio_path.filename()));
    }
  }
  synth::SynthOptions bad;
  bad.out_dir = a;
  CHECK_THROWS_AS(synth::GenerateCorpus(bad), ConfigError);
  bad.size = 1;
  bad.out_dir = "/proc/mpc_not_writable";
  CHECK_THROWS_AS(synth::GenerateCorpus(bad), DataError);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("synth: tagging classes occupy disjoint mel bands") {
  const std::size_t classes = 4;
  const audio::FrontendConfig f;
  Rng rng(3);
  std::vector<std::size_t> peaks;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto [lo, hi] = synth::ClassBand(c, classes);
    if (c > 0) CHECK(lo > synth::ClassBand(c - 1, classes).second);
    std::vector<double> mean(40, 0.0);
    for (int k = 0; k < 10; ++k) {
      const auto seq = audio::LogMel(synth::TagClip(rng, c, classes, 16000, 1.0), f);
      for (std::size_t t = 0; t < seq.num_frames; ++t) {
        for (std::size_t j = 0; j < 40; ++j) mean[j] += std::exp(seq.values[t * 40 + j]);
      }
    }
    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
    // Centre of the peak filter lies inside the class band.
    const double lo_mel = audio::HzToMel(f.fmin), hi_mel = audio::HzToMel(f.fmax);
    const double centre = audio::MelToHz(lo_mel + (hi_mel - lo_mel) * (peak + 1) / 41.0);
    CHECK(centre > lo * 0.85);
    CHECK(centre < hi * 1.15);
    peaks.push_back(peak);
  }
  for (std::size_t c = 1; c < classes; ++c) CHECK(peaks[c] > peaks[c - 1]);
}

TEST_CASE("synth: copy task transcripts") {
  const fs::path dir = TempDir("synth_s2s");
  synth::SynthOptions o;
  o.kind = TaskKind::kSeq2Seq;
  o.size = 50;
  o.out_dir = dir;
  const auto recs = ReadManifest(synth::GenerateCorpus(o).train_manifest, TaskKind::kSeq2Seq);
  for (const auto& r : recs) {
    const std::size_t letters = (r.text.size() + 1) / 2;
    CHECK(letters >= 3);
    CHECK(letters <= 8);
    for (std::size_t i = 0; i < r.text.size(); ++i) {
      if (i % 2) {
        CHECK(r.text[i] == ' ');
      } else {
        CHECK(r.text[i] >= 'a');
        CHECK(r.text[i] <= 'p');
      }
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("features: cache returns identical matrices in manifest order") {
  const fs::path dir = TempDir("features");
  synth::SynthOptions o;
  o.kind = TaskKind::kPretrain;
  o.size = 5;
  o.out_dir = dir / "data";
  const auto recs = ReadManifest(synth::GenerateCorpus(o).train_manifest, TaskKind::kPretrain);
  const audio::FrontendConfig f;
  const auto direct = ExtractFeatures(recs, f, 1.0);
  const auto first = ExtractFeatures(recs, f, 1.0, dir / "cache");
  const auto second = ExtractFeatures(recs, f, 1.0, dir / "cache");
  CHECK(std::distance(fs::directory_iterator(dir / "cache"), fs::directory_iterator()) == 5);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(direct[i].source_id == recs[i].id);
    CHECK(second[i].source_id == recs[i].id);
    CHECK(direct[i].values == first[i].values);
    CHECK(direct[i].values == second[i].values);
    CHECK(direct[i].num_frames == second[i].num_frames);
  }
  const auto slow = ExtractFeatures(recs, f, 0.9, dir / "cache");
  CHECK(slow[0].num_frames > direct[0].num_frames);
  fs::remove_all(dir);
}

struct TinyRun {
  fs::path dir;
  RunConfig pretrain;
  RunConfig tag;
};

TinyRun MakeTinyRun(const std::string& name) {
  TinyRun t;
  t.dir = TempDir(name);
  synth::SynthOptions o;
  o.size = 6;
  o.dev_size = 4;
  o.min_seconds = 0.3;
  o.max_seconds = 0.5;
  o.kind = TaskKind::kPretrain;
  o.out_dir = t.dir / "pre";
  synth::GenerateCorpus(o);
  o.kind = TaskKind::kTag;
  o.out_dir = t.dir / "tag";
  synth::GenerateCorpus(o);
  const std::string common =
      "[model]\nd_model = 16\nffn = 32\nheads = 2\nenc_layers = 1\ndec_layers = 1\n"
      "dropout = 0.1\n[schedule]\nk = 1\nwarmup_n = 10\nd_model_exponent = -0.5\n"
      "[train]\nbatch_size = 4\nepochs = 3\ncheckpoint_every = 2\nlog_every = 1\n"
      "average_best = 2\n";
  t.pretrain = RunConfig::FromIniString("[task]\nkind = pretrain\n" + common +
                                        "[paths]\ntrain_manifest = pre/train.tsv\n"
                                        "dev_manifest = pre/dev.tsv\nout_dir = out_pre\n",
                                        t.dir);
  t.tag = RunConfig::FromIniString("[task]\nkind = tag\n" + common +
                                   "[paths]\ntrain_manifest = tag/train.tsv\n"
                                   "dev_manifest = tag/dev.tsv\nout_dir = out_tag\n",
                                   t.dir);
  return t;
}

TEST_CASE("commands: pretrain is reproducible and finetune loads its encoder") {
  TinyRun t = MakeTinyRun("commands");
  commands::CommandOptions opt;
  const auto a = commands::Pretrain(t.pretrain, opt);
  opt.out = t.dir / "out_pre_again";
  const auto b = commands::Pretrain(t.pretrain, opt);
  CHECK(a.step_losses.size() == 6);
  CHECK(a.step_losses == b.step_losses);
  CHECK(ReadBytes(a.final_checkpoint) == ReadBytes(b.final_checkpoint));
  CHECK(fs::exists(a.out_dir / "train_log.jsonl"));
  opt.seed = 77;
  opt.out = t.dir / "out_pre_seed";
  const auto c = commands::Pretrain(t.pretrain, opt);
  CHECK(c.step_losses != a.step_losses);

  commands::CommandOptions ft;
  const auto scratch = commands::Finetune(t.tag, ft);
  ft.init = a.final_checkpoint;
  ft.out = t.dir / "out_tag_init";
  const auto init = commands::Finetune(t.tag, ft);
  CHECK(scratch.step_losses.front() != init.step_losses.front());
  const Checkpoint s = LoadCheckpoint(scratch.final_checkpoint);
  const Checkpoint i = LoadCheckpoint(init.final_checkpoint);
  CHECK(s.params.size() == i.params.size());
  for (const auto& [name, p] : s.params) CHECK(i.params.Get(name).shape() == p.shape());

  RunConfig wider = t.tag;
  wider.model.ffn = 48;
  ft.out = t.dir / "out_tag_bad";
  const std::string err = ErrorText([&] { commands::Finetune(wider, ft); });
  CHECK(err.find("encoder.layers.0.ffn.fc1.weight: expected [16,48], found [16,32]") !=
        std::string::npos);
  CHECK_THROWS_AS(commands::Finetune(wider, ft), CheckpointError);

  const fs::path report = t.dir / "report.jsonl";
  commands::CommandOptions ev;
  ev.out = report;
  const auto e1 = commands::Evaluate(init.final_checkpoint, t.dir / "tag/dev.tsv", TaskKind::kTag, ev);
  const auto e2 = commands::Evaluate(init.final_checkpoint, t.dir / "tag/dev.tsv", TaskKind::kTag, ev);
  REQUIRE(e1.reports.size() == 2);
  CHECK(e1.reports[0].ToJsonLine() == e2.reports[0].ToJsonLine());
  CHECK(e1.reports[1].metric == "macro_f1");
  CHECK_THROWS_AS(commands::Evaluate(init.final_checkpoint, t.dir / "tag/dev.tsv",
                                     TaskKind::kSeq2Seq, ev),
                  CheckpointError);
  CHECK_THROWS_AS(commands::Evaluate(a.final_checkpoint, t.dir / "tag/dev.tsv", TaskKind::kTag, ev),
                  CheckpointError);

  const fs::path avg = t.dir / "avg.ckpt";
  commands::AverageCheckpoints({a.final_checkpoint, c.final_checkpoint}, avg);
  const Checkpoint pa = LoadCheckpoint(a.final_checkpoint), pc = LoadCheckpoint(c.final_checkpoint);
  const Checkpoint pv = LoadCheckpoint(avg);
  for (const auto& [name, p] : pv.params) {
    for (std::size_t k = 0; k < p.numel(); ++k) {
      CHECK(p.at(k) == doctest::Approx(0.5 * (pa.params.Get(name).at(k) +
                                              pc.params.Get(name).at(k))));
    }
  }
  CHECK_THROWS_AS(commands::AverageCheckpoints({a.final_checkpoint, init.final_checkpoint}, avg),
                  CheckpointError);
  std::ostringstream os;
  commands::InspectCheckpoint(avg, os);
  CHECK(os.str().find("head        reconstruction") != std::string::npos);
  fs::remove_all(t.dir);
}

int RunTool(const std::string& args) {
  const std::string cmd = std::string(MPC_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_CASE("command-line tool exit codes") {
  const fs::path dir = TempDir("tool");
  const std::string d = dir.string();
  CHECK(RunTool("synth-data --kind tag --size 4 --dev-size 4 --seed 1 --out " + d + "/tag") == 0);
  CHECK(RunTool("synth-data --kind tag --size 0 --out " + d + "/x") == 2);
  CHECK(RunTool("no-such-command") == 2);
  WriteText(dir / "bad.ini", "[model]\nd_model = many\n");
  CHECK(RunTool("pretrain --config " + d + "/bad.ini") == 2);
  WriteText(dir / "missing.tsv", "u1\tnowhere.wav\n");
  WriteText(dir / "pre.ini",
            "[task]\nkind = pretrain\n[train]\nmax_steps = 1\n[paths]\n"
            "train_manifest = missing.tsv\nout_dir = out\n");
  CHECK(RunTool("pretrain --config " + d + "/pre.ini") == 3);
  WriteText(dir / "fake.ckpt", "not a checkpoint");
  CHECK(RunTool("inspect-checkpoint " + d + "/fake.ckpt") == 4);
  CHECK(RunTool("evaluate --checkpoint " + d + "/fake.ckpt --manifest " + d +
                "/tag/dev.tsv --task tag") == 4);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace mpc
