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

// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per check and
// exits non-zero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "CLI11.hpp"
#include "mpc/checkpoint.hpp"
#include "mpc/commands.hpp"
#include "mpc/config.hpp"
#include "mpc/metrics.hpp"
#include "mpc/model.hpp"
#include "mpc/ops.hpp"
#include "mpc/optim.hpp"
#include "mpc/pretrain.hpp"
#include "mpc/rng.hpp"
#include "mpc/synth.hpp"
#include "mpc/tensor.hpp"
#include "support/gradient_suite.hpp"
#include "support/metric_oracles.hpp"
#include "support/pipeline_check.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mpc;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0,
                double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string ReadBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path FreshDir(const fs::path& p) {
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void Corpus(TaskKind kind, std::size_t size, std::size_t dev_size, std::uint64_t seed,
            const fs::path& out, double min_s, double max_s) {
  synth::SynthOptions o;
  o.kind = kind;
  o.size = size;
  o.dev_size = dev_size;
  o.seed = seed;
  o.out_dir = out;
  o.min_seconds = min_s;
  o.max_seconds = max_s;
  synth::GenerateCorpus(o);
}

// ---------------------------------------------------------------------------

Outcome GradientSuite() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  for (const auto& r : testing::RunPrimitiveGradientSuite(11, 1e-4)) {
    ok = ok && r.report.passed;
    if (r.report.max_rel_error >= worst) {
      worst = r.report.max_rel_error;
      worst_name = r.name;
    }
  }
  const auto pipe = testing::MicroPipelineGradCheck(12, 1e-4);
  ok = ok && pipe.passed && pipe.max_rel_error <= 1e-4 && worst <= 1e-4;
  const double secs = Seconds(start);
  ok = ok && secs <= 60.0;
  return {ok, "primitives max rel " + Fmt("%.3g", worst) + " (" + worst_name +
                  "), micro pipeline max rel " + Fmt("%.3g", pipe.max_rel_error) +
                  " over " + std::to_string(pipe.coordinates) + " coords, " +
                  Fmt("%.1f s", secs)};
}

Outcome Schedule() {
  struct Row {
    double k;
    std::int64_t w;
    std::int64_t n;
    double expected;
  };
  // Evaluated with 40-digit arithmetic at d_model = 256, exponent +0.5.
  const std::vector<Row> rows = {
      {0.5, 8000, 1, 1.1180339887498948482e-5},
      {0.5, 8000, 4000, 0.044721359549995793928},
      {0.5, 8000, 8000, 0.089442719099991587856},
      {0.5, 8000, 80000, 0.028284271247461900976},
      {0.3, 8000, 1, 6.708203932499368841e-6},
      {0.3, 8000, 4000, 0.026832815729997475364},
      {0.3, 8000, 8000, 0.053665631459994950728},
      {0.3, 8000, 80000, 0.016970562748477139958},
      {2.5, 25000, 1, 1.0119288512538813862e-5},
      {2.5, 25000, 4000, 0.04047715405015525545},
      {2.5, 25000, 8000, 0.080954308100310510899},
      {2.5, 25000, 80000, 0.14142135623730950488},
  };
  double worst = 0.0;
  for (const Row& r : rows) {
    ScheduleConfig c;
    c.k = r.k;
    c.warmup_n = r.w;
    c.d_model = 256;
    c.d_model_exponent = 0.5;
    worst = std::max(worst, std::fabs(LrAtStep(c, r.n) - r.expected) / r.expected);
  }
  bool peak_ok = true;
  for (const auto& [k, w] : std::vector<std::pair<double, std::int64_t>>{
           {0.5, 8000}, {0.3, 8000}, {2.5, 25000}}) {
    ScheduleConfig c;
    c.k = k;
    c.warmup_n = w;
    const double peak = LrAtStep(c, w);
    for (std::int64_t n = 1; n <= 4 * w; ++n) {
      if (n != w && LrAtStep(c, n) >= peak) peak_ok = false;
    }
  }
  return {worst <= 1e-12 && peak_ok,
          "12 frozen values, max rel err " + Fmt("%.3g", worst) + ", unique peak at warmup " +
              (peak_ok ? "yes" : "no")};
}

Outcome Masking() {
  constexpr std::size_t kPlans = 10000, kFrames = 400, kChunk = 4;
  Rng rng(1);
  std::vector<std::size_t> hits(kFrames / kChunk, 0);
  bool count_ok = true;
  for (std::size_t i = 0; i < kPlans; ++i) {
    const auto plan = pretrain::MakeMaskPlan(kFrames, kChunk, 0.15, rng);
    count_ok = count_ok && plan.num_chunks == 100 && plan.masked_chunks.size() == 15;
    for (std::size_t c : plan.masked_chunks) ++hits[c];
  }
  // Chi-square against uniform selection; per-chunk variance under sampling
  // without replacement is plans * 0.15 * 0.85.
  double lo = 1.0, hi = 0.0, chi2 = 0.0;
  for (std::size_t h : hits) {
    const double f = static_cast<double>(h) / kPlans;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    chi2 += (f - 0.15) * (f - 0.15) * kPlans / (0.15 * 0.85);
  }
  const bool freq_ok = lo >= 0.14 && hi <= 0.16 && chi2 <= 148.2;

  bool grad_ok = true, perturb_ok = true;
  constexpr std::size_t kBins = 40;
  for (int trial = 0; trial < 20; ++trial) {
    const auto plan = pretrain::MakeMaskPlan(kFrames, kChunk, 0.15, rng);
    std::vector<double> w(kFrames);
    for (std::size_t t = 0; t < kFrames; ++t) w[t] = plan.frame_mask[t] ? 1.0 : 0.0;
    const Tensor weights = Tensor::FromData({1, kFrames}, w);
    const Tensor target = testing::RandomTensor(rng, {1, kFrames, kBins});
    Tensor pred = testing::RandomTensor(rng, {1, kFrames, kBins}).set_requires_grad(true);
    Tape tape;
    double loss = 0.0;
    {
      TapeScope scope(tape);
      const Tensor l = pretrain::MaskedL1Loss(pred, target, weights);
      loss = l.item();
      Backward(tape, l);
    }
    for (std::size_t t = 0; t < kFrames; ++t) {
      for (std::size_t b = 0; b < kBins; ++b) {
        const double g = pred.grad()[t * kBins + b];
        if (plan.frame_mask[t] ? g == 0.0 : g != 0.0) grad_ok = false;
      }
    }
    Tensor moved = target.Clone();
    for (std::size_t t = 0; t < kFrames; ++t) {
      if (plan.frame_mask[t]) continue;
      for (std::size_t b = 0; b < kBins; ++b) {
        moved.mutable_data()[t * kBins + b] += rng.Uniform(-10.0, 10.0);
      }
    }
    const double again = pretrain::MaskedL1Loss(pred.Clone(), moved, weights).item();
    perturb_ok = perturb_ok && again == loss;
  }
  return {count_ok && freq_ok && grad_ok && perturb_ok,
          std::string("15/100 masked in every plan ") + (count_ok ? "yes" : "no") +
              ", chunk frequency in " + Fmt("[%.4f, %.4f]", lo, hi) +
              Fmt(" (chi2 %.1f, 99 dof)", chi2) +
              ", unmasked gradient exactly zero " + (grad_ok ? "yes" : "no") +
              ", loss unchanged by unmasked targets " + (perturb_ok ? "yes" : "no")};
}

Outcome Alignment() {
  model::ModelConfig cfg;
  cfg.d_model = 8;
  cfg.ffn = 16;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.dropout = 0.0;
  cfg.n_mels = 5;
  cfg.downsample = 4;
  Rng rng(14);
  ParameterSet params = model::InitParameters(cfg, model::HeadKind::kReconstruction, rng);
  bool length_ok = true, print_ok = true;
  std::size_t checks = 0;
  for (std::size_t frames = 4; frames <= 257; ++frames) {
    const std::size_t want = (frames + 3) / 4;
    const Tensor feats = testing::RandomTensor(rng, {1, frames, cfg.n_mels});
    const auto enc = model::Encode(params, cfg, feats, {frames}, false, rng);
    length_ok = length_ok && enc.states.dim(1) == want && enc.valid_lengths[0] == want;

    Tensor states = enc.states.Clone().set_requires_grad(true);
    const model::EncoderOutput leaf{states, enc.valid_lengths};
    const Tensor target = testing::RandomTensor(rng, {1, frames, cfg.n_mels});
    for (std::size_t c = 0; c < want; ++c) {
      std::vector<double> w(frames, 0.0);
      for (std::size_t t = c * 4; t < std::min(frames, (c + 1) * 4); ++t) w[t] = 1.0;
      Tape tape;
      {
        TapeScope scope(tape);
        const Tensor pred = model::ReconstructionHead(params, cfg, leaf, frames);
        Backward(tape, pretrain::MaskedL1Loss(pred, target,
                                              Tensor::FromData({1, frames}, w)));
      }
      for (std::size_t pos = 0; pos < want; ++pos) {
        double mag = 0.0;
        for (std::size_t j = 0; j < cfg.d_model; ++j) {
          mag += std::fabs(states.grad()[pos * cfg.d_model + j]);
        }
        if ((mag != 0.0) != (pos == c)) print_ok = false;
      }
      states.clear_grad();
      params.ZeroGrad();
      ++checks;
    }
  }
  return {length_ok && print_ok,
          std::string("encoded length == ceil(T/4) for T=4..257 ") +
              (length_ok ? "yes" : "no") + ", " + std::to_string(checks) +
              " chunk fingerprints isolate one encoder position " +
              (print_ok ? "yes" : "no")};
}

// Shared by the overfit and transfer checks.
const char* kTrunkIni =
    "[model]\nd_model = 64\nffn = 256\nheads = 4\ndropout = 0\nenc_layers = 4\n"
    "downsample = 4\n";

Outcome Overfit(const fs::path& work, fs::path* checkpoint) {
  const fs::path dir = FreshDir(work / "overfit");
  Corpus(TaskKind::kPretrain, 32, 0, 501, dir / "data", 1.0, 2.0);
  const std::string ini = std::string("[task]\nkind = pretrain\nseed = 1\n") + kTrunkIni +
                          "[schedule]\nk = 0.25\nwarmup_n = 200\nd_model_exponent = -0.5\n"
                          "[train]\nbatch_size = 16\nepochs = 0\nmax_steps = 2000\n"
                          "checkpoint_every = 100\nlog_every = 250\n"
                          "[paths]\ntrain_manifest = data/train.tsv\nout_dir = run\n";
  const auto start = Clock::now();
  const auto res = commands::Pretrain(RunConfig::FromIniString(ini, dir), {});
  const double secs = Seconds(start);
  *checkpoint = res.final_checkpoint;
  const double initial = res.evals.front().score;
  double best = initial;
  std::int64_t best_step = 0;
  for (const auto& e : res.evals) {
    if (e.score < best) {
      best = e.score;
      best_step = e.step;
    }
  }
  const double ratio = best / initial;
  return {ratio < 0.10 && secs <= 600.0,
          "masked L1 " + Fmt("%.4f", initial) + " at step 0, " + Fmt("%.4f", best) +
              " at step " + std::to_string(best_step) + " (" + Fmt("%.2f%%", 100 * ratio) +
              "), averaged model " + Fmt("%.4f", res.final_score) + ", " +
              Fmt("%.0f s", secs)};
}

Outcome Tagging(const fs::path& work) {
  const fs::path dir = FreshDir(work / "tagging");
  Corpus(TaskKind::kTag, 64, 64, 601, dir / "data", 1.0, 2.0);
  const std::string ini =
      "[task]\nkind = tag\nseed = 1\n"
      "[model]\nd_model = 32\nffn = 64\nheads = 2\ndropout = 0\nenc_layers = 2\n"
      "[schedule]\nk = 1\nwarmup_n = 50\nd_model_exponent = -0.5\n"
      "[train]\nbatch_size = 8\nepochs = 0\nmax_steps = 200\ncheckpoint_every = 20\n"
      "log_every = 50\n"
      "[paths]\ntrain_manifest = data/train.tsv\ndev_manifest = data/dev.tsv\n"
      "out_dir = run\n";
  const auto res = commands::Finetune(RunConfig::FromIniString(ini, dir), {});
  commands::CommandOptions eo;
  const auto out =
      commands::Evaluate(res.final_checkpoint, dir / "data" / "dev.tsv", TaskKind::kTag, eo);
  double uar = -1.0, f1 = -1.0;
  for (const auto& r : out.reports) {
    if (r.metric == "uar") uar = r.value;
    if (r.metric == "macro_f1") f1 = r.value;
  }
  std::int64_t first = -1;
  for (const auto& e : res.evals) {
    if (e.score == 1.0) {
      first = e.step;
      break;
    }
  }
  return {uar == 1.0 && f1 == 1.0,
          "held-out UAR " + Fmt("%.4f", uar) + ", macro-F1 " + Fmt("%.4f", f1) +
              " after 200 steps (UAR 1.0 first reached at step " + std::to_string(first) +
              ")"};
}

Outcome Seq2Seq(const fs::path& work) {
  const fs::path dir = FreshDir(work / "seq2seq");
  Corpus(TaskKind::kSeq2Seq, 1024, 64, 701, dir / "data", 1.0, 2.0);
  const std::string ini =
      "[task]\nkind = seq2seq\nseed = 1\n"
      "[model]\nd_model = 64\nffn = 128\nheads = 4\ndropout = 0\nenc_layers = 2\n"
      "dec_layers = 2\n"
      "[schedule]\nk = 0.5\nwarmup_n = 200\nd_model_exponent = -0.5\n"
      "[train]\nbatch_size = 16\nepochs = 0\nmax_steps = 2000\ncheckpoint_every = 250\n"
      "log_every = 250\nbpe_vocab_size = 64\nmax_len = 12\n"
      "[paths]\ntrain_manifest = data/train.tsv\ndev_manifest = data/dev.tsv\n"
      "out_dir = run\n";
  const auto res = commands::Finetune(RunConfig::FromIniString(ini, dir), {});
  std::vector<fs::path> ckpts;
  for (const auto& e : res.evals) {
    if (!e.checkpoint.empty()) ckpts.push_back(e.checkpoint);
  }
  ckpts.push_back(res.final_checkpoint);
  auto bleu = [&](const fs::path& ckpt, std::size_t beam) {
    commands::CommandOptions o;
    o.beam = beam;
    const auto out = commands::Evaluate(ckpt, dir / "data" / "dev.tsv", TaskKind::kSeq2Seq, o);
    return out.reports.front().value;
  };
  bool ordered = true;
  std::size_t violations = 0;
  double final10 = 0.0, final1 = 0.0;
  for (const auto& c : ckpts) {
    const double b1 = bleu(c, 1), b10 = bleu(c, 10);
    if (b1 > b10) {
      ordered = false;
      ++violations;
    }
    final1 = b1;
    final10 = b10;
  }
  return {final10 >= 99.0 && ordered,
          "held-out BLEU " + Fmt("%.2f", final10) + " at beam 10, " + Fmt("%.2f", final1) +
              " at beam 1; beam 1 <= beam 10 on " +
              std::to_string(ckpts.size() - violations) + "/" +
              std::to_string(ckpts.size()) + " checkpoints"};
}

ConfusionMatrix FromCounts(const testing::Counts& c) {
  ConfusionMatrix cm(c.size());
  for (std::size_t r = 0; r < c.size(); ++r) {
    for (std::size_t h = 0; h < c.size(); ++h) {
      cm.Add(r, h, static_cast<std::uint64_t>(c[r][h]));
    }
  }
  return cm;
}

Outcome MetricOracles() {
  Rng rng(15);
  bool cm_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.UniformInt(6);
    testing::Counts c(n, std::vector<long>(n));
    for (auto& row : c) {
      for (long& v : row) v = static_cast<long>(rng.UniformInt(7));
    }
    for (std::size_t r = 0; r < n; ++r) c[r][rng.UniformInt(n)] += 1;
    const ConfusionMatrix cm = FromCounts(c);
    cm_ok = cm_ok && Uar(cm) == testing::OracleUar(c) &&
            MacroF1(cm) == testing::OracleMacroF1(c);
  }
  const std::vector<std::string> lexicon = {"the", "cat", "sat", "on", "a", "mat",
                                            "dog", "ran", ",", ".", "The", "mat."};
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> hyps, refs;
    const std::size_t m = 1 + rng.UniformInt(6);
    for (std::size_t s = 0; s < m; ++s) {
      refs.push_back(testing::RandomSentence(rng, 4, 12, lexicon));
      hyps.push_back(rng.Uniform() < 0.3 ? refs.back()
                                         : testing::RandomSentence(rng, 1, 12, lexicon));
    }
    worst = std::max(worst, std::fabs(Bleu(hyps, refs) - testing::OracleBleu(hyps, refs)));
  }
  const bool hand_ok =
      Uar(FromCounts({{3, 0}, {0, 5}})) == 1.0 && Uar(FromCounts({{2, 0}, {1, 1}})) == 0.75 &&
      MacroF1(FromCounts({{3, 0}, {0, 5}})) == 1.0 &&
      MacroF1(FromCounts({{1, 1}, {0, 1}})) == 2.0 / 3.0 &&
      Bleu({"the cat sat on the mat"}, {"the cat sat on the mat"}) == 100.0 &&
      Bleu({"the the the the"}, {"the cat"}) == 0.0;
  return {cm_ok && worst <= 1e-9 && hand_ok,
          std::string("UAR/macro-F1 bit-equal on 200 matrices ") + (cm_ok ? "yes" : "no") +
              ", BLEU max abs diff " + Fmt("%.3g", worst) + " on 200 corpora, hand examples " +
              (hand_ok ? "exact" : "differ")};
}

Outcome InfoNce() {
  Rng rng(16);
  double worst = 0.0;
  for (std::size_t b : {2, 4, 16}) {
    const Tensor ctx = testing::RandomTensor(rng, {6, 8});
    const Tensor pos = testing::RandomTensor(rng, {6, 5});
    // Identical candidates under a non-zero bilinear map.
    std::vector<double> negs;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t k = 0; k + 1 < b; ++k) {
        negs.insert(negs.end(), pos.data().begin() + i * 5, pos.data().begin() + (i + 1) * 5);
      }
    }
    const Tensor neg = Tensor::FromData({6, b - 1, 5}, negs);
    const double lnb = std::log(static_cast<double>(b));
    const double a = pretrain::InfoNceLoss(ctx, pos, neg, testing::RandomTensor(rng, {8, 5})).item();
    const double z = pretrain::InfoNceLoss(ctx, pos, testing::RandomTensor(rng, {6, b - 1, 5}),
                                           Tensor::Zeros({8, 5}))
                         .item();
    worst = std::max({worst, std::fabs(a - lnb), std::fabs(z - lnb)});
  }
  return {worst <= 1e-9, "B = 2, 4, 16: max |loss - ln B| = " + Fmt("%.3g", worst)};
}

Outcome Reproducibility(const fs::path& work) {
  const fs::path dir = FreshDir(work / "repro");
  Corpus(TaskKind::kPretrain, 12, 4, 801, dir / "data", 0.5, 1.0);
  const std::string ini =
      "[task]\nkind = pretrain\nseed = 3\n"
      "[model]\nd_model = 16\nffn = 32\nheads = 2\ndropout = 0.1\nenc_layers = 2\n"
      "[schedule]\nk = 1\nwarmup_n = 10\nd_model_exponent = -0.5\n"
      "[train]\nbatch_size = 4\nepochs = 0\nmax_steps = 25\ncheckpoint_every = 5\n"
      "log_every = 5\n"
      "[paths]\ntrain_manifest = data/train.tsv\ndev_manifest = data/dev.tsv\n"
      "out_dir = run_a\n";
  const RunConfig cfg = RunConfig::FromIniString(ini, dir);
  const auto a = commands::Pretrain(cfg, {});
  commands::CommandOptions second;
  second.out = dir / "run_b";
  const auto b = commands::Pretrain(cfg, second);
  std::size_t files = 0, same = 0;
  std::vector<fs::path> step_ckpts;
  for (const auto& entry : fs::directory_iterator(a.out_dir)) {
    if (entry.path().extension() != ".ckpt") continue;
    ++files;
    if (ReadBytes(entry.path()) == ReadBytes(b.out_dir / entry.path().filename())) ++same;
    if (entry.path().filename() != "final.ckpt") step_ckpts.push_back(entry.path());
  }
  std::sort(step_ckpts.begin(), step_ckpts.end());
  const bool runs_ok = files > 1 && files == same;

  const Checkpoint loaded = LoadCheckpoint(a.final_checkpoint);
  SaveCheckpoint(dir / "resaved.ckpt", loaded);
  const Checkpoint again = LoadCheckpoint(dir / "resaved.ckpt");
  bool trip_ok = ReadBytes(dir / "resaved.ckpt") == ReadBytes(a.final_checkpoint) &&
                 again.params.size() == loaded.params.size();
  for (const auto& [name, t] : loaded.params) {
    const auto x = t.data();
    const auto y = again.params.Get(name).data();
    trip_ok = trip_ok && std::equal(x.begin(), x.end(), y.begin(), y.end(),
                                    [](double p, double q) {
                                      return std::bit_cast<std::uint64_t>(p) ==
                                             std::bit_cast<std::uint64_t>(q);
                                    });
  }

  commands::AverageCheckpoints(step_ckpts, dir / "avg.ckpt");
  const Checkpoint avg = LoadCheckpoint(dir / "avg.ckpt");
  std::vector<Checkpoint> inputs;
  for (const auto& p : step_ckpts) inputs.push_back(LoadCheckpoint(p));
  using Big = boost::multiprecision::cpp_dec_float_50;
  double worst = 0.0;
  std::size_t values = 0;
  for (const auto& [name, t] : avg.params) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
      Big sum = 0;
      for (const auto& c : inputs) sum += Big(c.params.Get(name).at(i));
      const Big mean = sum / static_cast<int>(inputs.size());
      worst = std::max(worst, std::fabs(t.at(i) - mean.convert_to<double>()));
      ++values;
    }
  }
  return {runs_ok && trip_ok && worst <= 1e-6,
          std::to_string(same) + "/" + std::to_string(files) +
              " checkpoints byte-identical across runs, round trip bit-exact " +
              (trip_ok ? "yes" : "no") + ", average of " + std::to_string(inputs.size()) +
              " checkpoints vs 50-digit oracle max abs diff " + Fmt("%.3g", worst) +
              " over " + std::to_string(values) + " values"};
}

Outcome Transfer(const fs::path& work, const fs::path& pretrained) {
  const fs::path dir = FreshDir(work / "transfer");
  Corpus(TaskKind::kTag, 32, 64, 901, dir / "data", 1.0, 2.0);
  int wins = 0, ties = 0;
  std::string scores;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::string ini =
        std::string("[task]\nkind = tag\nseed = ") + std::to_string(seed) + "\n" + kTrunkIni +
        "[schedule]\nk = 0.5\nwarmup_n = 50\nd_model_exponent = -0.5\n"
        "[train]\nbatch_size = 8\nepochs = 0\nmax_steps = 200\ncheckpoint_every = 20\n"
        "log_every = 50\n"
        "[paths]\ntrain_manifest = data/train.tsv\ndev_manifest = data/dev.tsv\n"
        "out_dir = scratch_" + std::to_string(seed) + "\n";
    const RunConfig cfg = RunConfig::FromIniString(ini, dir);
    const auto scratch = commands::Finetune(cfg, {});
    commands::CommandOptions o;
    o.init = pretrained;
    o.out = dir / ("init_" + std::to_string(seed));
    const auto init = commands::Finetune(cfg, o);
    if (init.final_score >= scratch.final_score) ++wins;
    if (init.final_score == scratch.final_score) ++ties;
    scores += (seed > 1 ? ", " : "") + Fmt("%.3f/%.3f", init.final_score, scratch.final_score);
  }
  return {wins >= 4, "pretrained/scratch held-out UAR per seed: " + scores + "; pretrained >= " +
                         "scratch in " + std::to_string(wins) + "/5 (" + std::to_string(ties) +
                         " ties)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  std::string work_arg = (fs::temp_directory_path() / "mpc_acceptance").string();
  app.add_option("checks", only, "Run only these check numbers (1-11)")->check(CLI::Range(1, 11));
  app.add_option("--work", work_arg, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  const fs::path work = fs::absolute(work_arg);
  fs::create_directories(work);

  fs::path pretrained;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"gradient suite", GradientSuite},
      {"learning-rate schedule", Schedule},
      {"chunk masking", Masking},
      {"chunk alignment", Alignment},
      {"pretraining overfit", [&] { return Overfit(work, &pretrained); }},
      {"tagging fine-tune", [&] { return Tagging(work); }},
      {"seq2seq copy task", [&] { return Seq2Seq(work); }},
      {"metric oracles", MetricOracles},
      {"InfoNCE uniform scores", InfoNce},
      {"reproducibility", [&] { return Reproducibility(work); }},
      {"transfer from pretraining",
       [&] {
         if (pretrained.empty()) {
           Outcome pre = Overfit(work, &pretrained);
           (void)pre;
         }
         return Transfer(work, pretrained);
       }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ". " << checks[i].first << ": "
              << o.detail << " [" << Fmt("%.1f s", Seconds(start)) << "]" << std::endl;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " check(s) failed"
                         : std::string("acceptance: all checks passed"))
            << std::endl;
  return failures ? 1 : 0;
}
