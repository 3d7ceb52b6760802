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


#include "mpc/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"
#include "mpc/bpe.hpp"
#include "mpc/checkpoint.hpp"
#include "mpc/container.hpp"
#include "mpc/error.hpp"
#include "mpc/features.hpp"
#include "mpc/manifest.hpp"
#include "mpc/metrics.hpp"
#include "mpc/pretrain.hpp"

namespace mpc::commands {

using internal::StrCat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Streams {
  Rng init;
  Rng data;
  Rng dropout;
  Rng eval;

  explicit Streams(std::uint64_t seed) : init(0), data(0), dropout(0), eval(0) {
    Rng master(seed);
    init = master.Fork();
    data = master.Fork();
    dropout = master.Fork();
    eval = master.Fork();
  }
};

class TrainLog {
 public:
  TrainLog(const fs::path& path, std::ostream* progress)
      : out_(path, std::ios::trunc), progress_(progress), start_(Clock::now()) {
    if (!out_) throw DataError(StrCat("cannot write training log ", path.string()));
  }

  void Write(json record) {
    record["elapsed_s"] = std::chrono::duration<double>(Clock::now() - start_).count();
    out_ << record.dump() << '\n';
    out_.flush();
  }

  void Say(const std::string& line) {
    if (progress_) *progress_ << line << std::endl;
  }

 private:
  std::ofstream out_;
  std::ostream* progress_;
  Clock::time_point start_;
};

fs::path PrepareOutDir(const RunConfig& cfg, const CommandOptions& opt) {
  const fs::path dir = opt.out.empty() ? cfg.paths.out_dir : opt.out;
  if (dir.empty()) throw ConfigError("paths.out_dir: required (or pass --out)");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(StrCat("cannot create ", dir.string(), ": ", ec.message()));
  return dir;
}

void ApplyOverrides(RunConfig& cfg, const CommandOptions& opt) {
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.beam) cfg.train.beam = *opt.beam;
  if (opt.max_len) cfg.train.max_len = *opt.max_len;
  if (cfg.train.beam == 0) throw ConfigError("train.beam: must be >= 1");
  if (cfg.train.max_len == 0) throw ConfigError("train.max_len: must be >= 1");
}

// Original features followed by one perturbed copy per speed factor.
std::vector<audio::FeatureSequence> TrainingFeatures(const std::vector<ManifestRecord>& recs,
                                                     const RunConfig& cfg) {
  auto feats = ExtractFeatures(recs, cfg.frontend, 1.0, cfg.paths.feature_cache);
  for (double s : cfg.speed_factors) {
    if (s == 1.0) continue;
    auto more = ExtractFeatures(recs, cfg.frontend, s, cfg.paths.feature_cache);
    for (auto& f : more) feats.push_back(std::move(f));
  }
  return feats;
}

std::vector<std::size_t> Lengths(const std::vector<audio::FeatureSequence>& feats) {
  std::vector<std::size_t> out;
  for (const auto& f : feats) out.push_back(f.num_frames);
  return out;
}

std::vector<const audio::FeatureSequence*> Gather(
    const std::vector<audio::FeatureSequence>& feats, const std::vector<std::size_t>& idx) {
  std::vector<const audio::FeatureSequence*> out;
  for (std::size_t i : idx) out.push_back(&feats[i]);
  return out;
}

std::vector<std::vector<std::size_t>> InOrderBatches(std::size_t n, std::size_t bs) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += bs) {
    out.emplace_back();
    for (std::size_t j = i; j < std::min(n, i + bs); ++j) out.back().push_back(j);
  }
  return out;
}

std::int64_t TotalSteps(const TrainConfig& t, std::size_t batches_per_epoch) {
  const auto per_epoch = static_cast<std::int64_t>(batches_per_epoch);
  if (t.epochs == 0) return t.max_steps;
  const std::int64_t all = per_epoch * static_cast<std::int64_t>(t.epochs);
  return t.max_steps > 0 ? std::min(all, t.max_steps) : all;
}

std::string StepName(std::int64_t step) {
  std::ostringstream os;
  os << "step_" << std::setw(7) << std::setfill('0') << step << ".ckpt";
  return os.str();
}

std::string Fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

Checkpoint MakeCheckpoint(const RunConfig& cfg, model::HeadKind head,
                          const model::ModelConfig& m, const ParameterSet& params) {
  Checkpoint c;
  c.config_ini = cfg.ToIni();
  c.head = head;
  c.model = m;
  c.params = params.Clone();
  return c;
}

// Averages the best step checkpoints and returns the averaged parameters.
ParameterSet AverageBest(const std::vector<finetune::ScoredCheckpoint>& scored,
                         std::size_t k, finetune::Direction dir,
                         std::vector<std::string>& chosen) {
  chosen = finetune::SelectBestK(scored, k, dir);
  std::vector<ParameterSet> sets;
  for (const auto& id : chosen) sets.push_back(LoadCheckpoint(id).params);
  std::vector<const ParameterSet*> ptrs;
  for (const auto& s : sets) ptrs.push_back(&s);
  return finetune::AverageParameters(ptrs);
}

// ---- pretraining ----

struct PretrainEvalSet {
  std::vector<pretrain::PretrainBatch> batches;
};

PretrainEvalSet MakePretrainEvalSet(const std::vector<audio::FeatureSequence>& feats,
                                    const RunConfig& cfg, Rng& rng) {
  PretrainEvalSet set;
  for (const auto& idx : InOrderBatches(feats.size(), cfg.train.batch_size)) {
    set.batches.push_back(pretrain::MakePretrainBatch(Gather(feats, idx), cfg.model.downsample,
                                                      cfg.train.mask_rate, cfg.train.loss_mode,
                                                      rng));
  }
  return set;
}

double PretrainEvalLoss(const ParameterSet& params, const model::ModelConfig& m,
                        const PretrainEvalSet& set) {
  double total = 0.0;
  double weight = 0.0;
  for (const auto& b : set.batches) {
    const auto w = b.loss_weights.data();
    const double selected = std::accumulate(w.begin(), w.end(), 0.0);
    total += pretrain::EvaluateLoss(params, m, b) * selected;
    weight += selected;
  }
  return total / weight;
}

// ---- fine-tuning ----

struct Labels {
  std::vector<std::string> classes;
  std::vector<int> train;  // per training feature
  std::vector<int> dev;
};

struct Targets {
  BpeVocab vocab;
  std::vector<std::vector<int>> train;
  std::vector<std::string> dev_text;
};

std::vector<int> LabelIds(const std::vector<ManifestRecord>& recs,
                          const std::vector<std::string>& classes, const fs::path& manifest) {
  std::vector<int> out;
  for (const auto& r : recs) {
    const auto it = std::find(classes.begin(), classes.end(), r.label);
    if (it == classes.end()) {
      throw DataError(StrCat(manifest.string(), ":", r.line, ": label '", r.label,
                             "' not seen in the training manifest"));
    }
    out.push_back(static_cast<int>(it - classes.begin()));
  }
  return out;
}

ConfusionMatrix Confusion(const ParameterSet& params, const model::ModelConfig& m,
                          const std::vector<audio::FeatureSequence>& feats,
                          const std::vector<int>& labels, std::size_t batch_size) {
  ConfusionMatrix cm(m.n_classes);
  for (const auto& idx : InOrderBatches(feats.size(), batch_size)) {
    const auto input = finetune::PadFeatures(Gather(feats, idx));
    const auto pred = finetune::PredictClasses(params, m, input);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      cm.Add(static_cast<std::size_t>(labels[idx[i]]), static_cast<std::size_t>(pred[i]));
    }
  }
  return cm;
}

std::vector<std::string> DecodeAll(const ParameterSet& params, const model::ModelConfig& m,
                                   const std::vector<audio::FeatureSequence>& feats,
                                   const BpeVocab& vocab, std::size_t beam,
                                   std::size_t max_len) {
  model::BeamOptions opt;
  opt.beam = beam;
  opt.max_len = max_len;
  opt.bos = BpeVocab::kBos;
  opt.eos = BpeVocab::kEos;
  std::vector<std::string> out;
  for (const auto& f : feats) {
    out.push_back(vocab.Decode(finetune::DecodeUtterance(params, m, f, opt).tokens));
  }
  return out;
}

void CopyTrunk(const Checkpoint& init, ParameterSet& params, const fs::path& path) {
  std::vector<std::string> diff;
  for (auto& [name, t] : params) {
    if (!model::IsTrunkParameter(name)) continue;
    if (!init.params.Contains(name)) {
      diff.push_back(StrCat(name, ": missing from checkpoint"));
      continue;
    }
    const auto& src = init.params.Get(name);
    if (src.shape() != t.shape()) {
      auto fmt = [](const Shape& s) {
        std::string o = "[";
        for (std::size_t i = 0; i < s.size(); ++i) o += (i ? "," : "") + std::to_string(s[i]);
        return o + "]";
      };
      diff.push_back(StrCat(name, ": expected ", fmt(t.shape()), ", found ", fmt(src.shape())));
    }
  }
  for (const auto& [name, t] : init.params) {
    if (model::IsTrunkParameter(name) && !params.Contains(name)) {
      diff.push_back(StrCat(name, ": not part of the configured model"));
    }
  }
  if (!diff.empty()) {
    std::string msg = StrCat(path.string(), ": encoder is incompatible with the configuration:");
    for (const auto& d : diff) msg += "\n  " + d;
    throw CheckpointError(msg);
  }
  for (auto& [name, t] : params) {
    if (!model::IsTrunkParameter(name)) continue;
    const auto src = init.params.Get(name).data();
    std::copy(src.begin(), src.end(), t.mutable_data().begin());
  }
}

}  // namespace

TrainResult Pretrain(RunConfig cfg, const CommandOptions& opt) {
  if (cfg.task != TaskKind::kPretrain) {
    throw ConfigError(StrCat("task.kind: pretrain command needs kind = pretrain, got ",
                             TaskName(cfg.task)));
  }
  if (!opt.init.empty()) throw ConfigError("--init applies to finetune only");
  ApplyOverrides(cfg, opt);
  cfg.Validate(true);
  TrainResult result;
  result.out_dir = PrepareOutDir(cfg, opt);
  result.metric = "dev_masked_l1";
  const auto head = model::HeadKind::kReconstruction;
  const model::ModelConfig& m = cfg.model;

  Streams rng(cfg.seed);
  const auto train_recs = ReadManifest(cfg.paths.train_manifest, cfg.task);
  const auto train = TrainingFeatures(train_recs, cfg);
  const auto dev = cfg.paths.dev_manifest.empty()
                       ? ExtractFeatures(train_recs, cfg.frontend, 1.0, cfg.paths.feature_cache)
                       : ExtractFeatures(ReadManifest(cfg.paths.dev_manifest, cfg.task),
                                         cfg.frontend, 1.0, cfg.paths.feature_cache);
  for (const auto& f : train) {
    if (f.num_frames < m.downsample) {
      throw DataError(StrCat("pretrain: utterance ", f.source_id, " has ", f.num_frames,
                             " frames, fewer than one chunk of ", m.downsample));
    }
  }
  const PretrainEvalSet eval_set = MakePretrainEvalSet(dev, cfg, rng.eval);

  ParameterSet params = model::InitParameters(m, head, rng.init);
  AdamState adam;
  TrainLog log(result.out_dir / "train_log.jsonl", opt.progress);
  log.Write({{"event", "start"}, {"task", "pretrain"}, {"seed", cfg.seed},
             {"train_utterances", train.size()}, {"dev_utterances", dev.size()},
             {"parameters", params.NumValues()}, {"config", cfg.ToIni()}});
  log.Say(StrCat("pretrain: ", train.size(), " training and ", dev.size(),
                 " validation utterances, ", params.NumValues(), " parameters, seed ",
                 cfg.seed));

  const double initial = PretrainEvalLoss(params, m, eval_set);
  result.evals.push_back({0, initial, {}});
  log.Write({{"step", 0}, {"dev_loss", initial}});

  const auto lengths = Lengths(train);
  const std::size_t per_epoch = (train.size() + cfg.train.batch_size - 1) / cfg.train.batch_size;
  const std::int64_t total = TotalSteps(cfg.train, per_epoch);
  std::vector<finetune::ScoredCheckpoint> scored;
  std::int64_t step = 0;
  double window = 0.0;
  while (step < total) {
    for (const auto& idx : pretrain::BucketBatches(lengths, cfg.train.batch_size, rng.data)) {
      if (step >= total) break;
      ++step;
      const auto batch = pretrain::MakePretrainBatch(Gather(train, idx), m.downsample,
                                                     cfg.train.mask_rate, cfg.train.loss_mode,
                                                     rng.data);
      const double loss =
          pretrain::PretrainStep(batch, params, adam, cfg.schedule, step, m, rng.dropout);
      result.step_losses.push_back(loss);
      window += loss;
      if (step % cfg.train.log_every == 0) {
        const double mean = window / static_cast<double>(cfg.train.log_every);
        log.Write({{"step", step}, {"lr", LrAtStep(cfg.schedule, step)}, {"loss", mean}});
        log.Say(StrCat("step ", step, " loss ", Fixed(mean, 5)));
        window = 0.0;
      }
      if (step % cfg.train.checkpoint_every == 0 || step == total) {
        const double dev_loss = PretrainEvalLoss(params, m, eval_set);
        const fs::path path = result.out_dir / StepName(step);
        Checkpoint c = MakeCheckpoint(cfg, head, m, params);
        c.has_optimizer = true;
        c.adam = adam;
        c.step = step;
        c.score = dev_loss;
        c.score_metric = result.metric;
        SaveCheckpoint(path, c);
        scored.push_back({path.string(), step, dev_loss});
        result.evals.push_back({step, dev_loss, path});
        log.Write({{"step", step}, {"dev_loss", dev_loss}, {"checkpoint", path.filename()}});
        log.Say(StrCat("step ", step, " validation masked L1 ", Fixed(dev_loss, 5)));
      }
    }
  }

  std::vector<std::string> chosen;
  const ParameterSet avg =
      AverageBest(scored, cfg.train.average_best, finetune::Direction::kMinimize, chosen);
  result.final_score = PretrainEvalLoss(avg, m, eval_set);
  Checkpoint final_ckpt = MakeCheckpoint(cfg, head, m, avg);
  final_ckpt.step = step;
  final_ckpt.score = result.final_score;
  final_ckpt.score_metric = result.metric;
  result.final_checkpoint = result.out_dir / "final.ckpt";
  SaveCheckpoint(result.final_checkpoint, final_ckpt);
  log.Write({{"event", "final"}, {"averaged", chosen}, {"dev_loss", result.final_score}});
  log.Say(StrCat("averaged ", chosen.size(), " checkpoints: validation masked L1 ",
                 Fixed(result.final_score, 5), " -> ", result.final_checkpoint.string()));
  return result;
}

TrainResult Finetune(RunConfig cfg, const CommandOptions& opt) {
  if (cfg.task == TaskKind::kPretrain) {
    throw ConfigError("task.kind: finetune command needs kind = tag or seq2seq");
  }
  ApplyOverrides(cfg, opt);
  cfg.Validate(true);
  TrainResult result;
  result.out_dir = PrepareOutDir(cfg, opt);
  const bool tagging = cfg.task == TaskKind::kTag;
  const auto head = HeadForTask(cfg.task);
  result.metric = tagging ? "dev_uar" : "dev_bleu";

  Streams rng(cfg.seed);
  const auto train_recs = ReadManifest(cfg.paths.train_manifest, cfg.task);
  const auto dev_manifest =
      cfg.paths.dev_manifest.empty() ? cfg.paths.train_manifest : cfg.paths.dev_manifest;
  const auto dev_recs = ReadManifest(dev_manifest, cfg.task);
  const auto train = TrainingFeatures(train_recs, cfg);
  const auto dev = ExtractFeatures(dev_recs, cfg.frontend, 1.0, cfg.paths.feature_cache);

  model::ModelConfig m = cfg.model;
  Labels labels;
  Targets targets;
  if (tagging) {
    std::set<std::string> names;
    for (const auto& r : train_recs) names.insert(r.label);
    labels.classes.assign(names.begin(), names.end());
    if (labels.classes.size() < 2) {
      throw DataError("finetune: the training manifest needs at least two labels");
    }
    const auto base = LabelIds(train_recs, labels.classes, cfg.paths.train_manifest);
    for (std::size_t i = 0; i < train.size(); ++i) labels.train.push_back(base[i % base.size()]);
    labels.dev = LabelIds(dev_recs, labels.classes, dev_manifest);
    m.n_classes = labels.classes.size();
  } else {
    std::vector<std::string> texts;
    for (const auto& r : train_recs) texts.push_back(r.text);
    targets.vocab = BpeVocab::Train(texts, cfg.train.bpe_vocab_size);
    std::vector<std::vector<int>> base;
    for (const auto& t : texts) base.push_back(targets.vocab.Encode(t));
    for (std::size_t i = 0; i < train.size(); ++i) targets.train.push_back(base[i % base.size()]);
    for (const auto& r : dev_recs) targets.dev_text.push_back(r.text);
    m.vocab_size = targets.vocab.size();
  }
  m.Validate(head);

  ParameterSet params = model::InitParameters(m, head, rng.init);
  if (!opt.init.empty()) {
    const Checkpoint init = LoadCheckpoint(opt.init);
    CopyTrunk(init, params, opt.init);
  }

  auto validate = [&](const ParameterSet& p) {
    if (tagging) return Uar(Confusion(p, m, dev, labels.dev, cfg.train.batch_size));
    return Bleu(DecodeAll(p, m, dev, targets.vocab, cfg.train.eval_beam, cfg.train.max_len),
                targets.dev_text);
  };

  AdamState adam;
  TrainLog log(result.out_dir / "train_log.jsonl", opt.progress);
  log.Write({{"event", "start"}, {"task", TaskName(cfg.task)}, {"seed", cfg.seed},
             {"init", opt.init.string()}, {"train_utterances", train.size()},
             {"dev_utterances", dev.size()}, {"parameters", params.NumValues()},
             {"config", cfg.ToIni()}});
  log.Say(StrCat("finetune ", TaskName(cfg.task), ": ", train.size(), " training and ",
                 dev.size(), " validation utterances, ", params.NumValues(),
                 " parameters, seed ", cfg.seed,
                 opt.init.empty() ? std::string() : ", trunk from " + opt.init.string()));

  const double initial = validate(params);
  result.evals.push_back({0, initial, {}});
  log.Write({{"step", 0}, {result.metric, initial}});

  const auto lengths = Lengths(train);
  const std::size_t per_epoch = (train.size() + cfg.train.batch_size - 1) / cfg.train.batch_size;
  const std::int64_t total = TotalSteps(cfg.train, per_epoch);
  const double smoothing = tagging ? 0.0 : cfg.train.label_smoothing;
  std::vector<finetune::ScoredCheckpoint> scored;
  std::int64_t step = 0;
  double window = 0.0;
  while (step < total) {
    for (const auto& idx : pretrain::BucketBatches(lengths, cfg.train.batch_size, rng.data)) {
      if (step >= total) break;
      ++step;
      finetune::FinetuneBatch batch;
      batch.input = finetune::PadFeatures(Gather(train, idx));
      if (tagging) {
        for (std::size_t i : idx) batch.labels.push_back(labels.train[i]);
      } else {
        std::vector<std::vector<int>> tokens;
        for (std::size_t i : idx) tokens.push_back(targets.train[i]);
        finetune::SetTokenTargets(batch, tokens, BpeVocab::kBos, BpeVocab::kEos,
                                  BpeVocab::kPad);
      }
      const double loss = finetune::FinetuneStep(batch, params, head, adam, cfg.schedule, step,
                                                 m, smoothing, BpeVocab::kPad, rng.dropout);
      result.step_losses.push_back(loss);
      window += loss;
      if (step % cfg.train.log_every == 0) {
        const double mean = window / static_cast<double>(cfg.train.log_every);
        log.Write({{"step", step}, {"lr", LrAtStep(cfg.schedule, step)}, {"loss", mean}});
        log.Say(StrCat("step ", step, " loss ", Fixed(mean, 5)));
        window = 0.0;
      }
      if (step % cfg.train.checkpoint_every == 0 || step == total) {
        const double score = validate(params);
        const fs::path path = result.out_dir / StepName(step);
        Checkpoint c = MakeCheckpoint(cfg, head, m, params);
        c.has_optimizer = true;
        c.adam = adam;
        c.step = step;
        c.score = score;
        c.score_metric = result.metric;
        c.classes = labels.classes;
        if (!tagging) c.bpe_json = targets.vocab.ToJson();
        SaveCheckpoint(path, c);
        scored.push_back({path.string(), step, score});
        result.evals.push_back({step, score, path});
        log.Write({{"step", step}, {result.metric, score}, {"checkpoint", path.filename()}});
        log.Say(StrCat("step ", step, " ", result.metric, " ", Fixed(score, 4)));
      }
    }
  }

  std::vector<std::string> chosen;
  const ParameterSet avg =
      AverageBest(scored, cfg.train.average_best, finetune::Direction::kMaximize, chosen);
  result.final_score = validate(avg);
  Checkpoint final_ckpt = MakeCheckpoint(cfg, head, m, avg);
  final_ckpt.step = step;
  final_ckpt.score = result.final_score;
  final_ckpt.score_metric = result.metric;
  final_ckpt.classes = labels.classes;
  if (!tagging) final_ckpt.bpe_json = targets.vocab.ToJson();
  result.final_checkpoint = result.out_dir / "final.ckpt";
  SaveCheckpoint(result.final_checkpoint, final_ckpt);
  log.Write({{"event", "final"}, {"averaged", chosen}, {result.metric, result.final_score}});
  log.Say(StrCat("averaged ", chosen.size(), " checkpoints: ", result.metric, " ",
                 Fixed(result.final_score, 4), " -> ", result.final_checkpoint.string()));
  return result;
}

EvalOutput Evaluate(const fs::path& checkpoint, const fs::path& manifest, TaskKind task,
                    const CommandOptions& opt) {
  if (task == TaskKind::kPretrain) {
    throw ConfigError("evaluate: task must be tag or seq2seq");
  }
  const Checkpoint ckpt = LoadCheckpoint(checkpoint);
  if (ckpt.head != HeadForTask(task)) {
    throw CheckpointError(StrCat(checkpoint.string(), ": checkpoint has a ",
                                 model::HeadName(ckpt.head), " head, task ", TaskName(task),
                                 " needs ", model::HeadName(HeadForTask(task))));
  }
  RunConfig cfg = RunConfig::FromIniString(ckpt.config_ini);
  ApplyOverrides(cfg, opt);
  const auto recs = ReadManifest(manifest, task);
  const auto feats = ExtractFeatures(recs, cfg.frontend, 1.0, cfg.paths.feature_cache);

  EvalOutput out;
  const std::string dataset = manifest.string();
  const std::string ckpt_id = checkpoint.string();
  if (task == TaskKind::kTag) {
    const auto ids = LabelIds(recs, ckpt.classes, manifest);
    const auto cm = Confusion(ckpt.params, ckpt.model, feats, ids, cfg.train.batch_size);
    out.reports.push_back({"uar", Uar(cm), PerClassRecall(cm), dataset, ckpt_id});
    out.reports.push_back({"macro_f1", MacroF1(cm), PerClassF1(cm), dataset, ckpt_id});
  } else {
    const BpeVocab vocab = BpeVocab::FromJson(ckpt.bpe_json);
    out.hypotheses =
        DecodeAll(ckpt.params, ckpt.model, feats, vocab, cfg.train.beam, cfg.train.max_len);
    std::vector<std::string> refs;
    for (const auto& r : recs) refs.push_back(r.text);
    out.reports.push_back({"bleu", Bleu(out.hypotheses, refs), {}, dataset, ckpt_id});
  }
  if (opt.progress) {
    for (const auto& r : out.reports) *opt.progress << r.ToJsonLine() << '\n';
  }
  if (!opt.out.empty()) finetune::AppendReports(opt.out, out.reports);
  return out;
}

void AverageCheckpoints(const std::vector<fs::path>& inputs, const fs::path& out) {
  if (inputs.empty()) throw CheckpointError("avg-checkpoints: no input checkpoints");
  std::vector<Checkpoint> ckpts;
  for (const auto& p : inputs) ckpts.push_back(LoadCheckpoint(p));
  const Checkpoint& first = ckpts.front();
  std::vector<const ParameterSet*> sets;
  std::int64_t step = 0;
  for (std::size_t i = 0; i < ckpts.size(); ++i) {
    const auto& c = ckpts[i];
    if (c.head != first.head) {
      throw CheckpointError(StrCat(inputs[i].string(), ": head ", model::HeadName(c.head),
                                   " differs from ", model::HeadName(first.head)));
    }
    try {
      RequireModelConfig(c, first.model);
    } catch (const CheckpointError& e) {
      throw CheckpointError(StrCat(inputs[i].string(), ": ", e.what()));
    }
    if (c.classes != first.classes || c.bpe_json != first.bpe_json) {
      throw CheckpointError(StrCat(inputs[i].string(), ": label set or vocabulary differs"));
    }
    sets.push_back(&c.params);
    step = std::max(step, c.step);
  }
  Checkpoint avg;
  avg.config_ini = first.config_ini;
  avg.head = first.head;
  avg.model = first.model;
  avg.params = finetune::AverageParameters(sets);
  avg.step = step;
  avg.classes = first.classes;
  avg.bpe_json = first.bpe_json;
  SaveCheckpoint(out, avg);
}

void InspectCheckpoint(const fs::path& path, std::ostream& os) {
  const Checkpoint c = LoadCheckpoint(path);
  const auto& m = c.model;
  os << "checkpoint  " << path.string() << "\n"
     << "format      " << kContainerVersion << "\n"
     << "head        " << model::HeadName(c.head) << "\n"
     << "model       d_model=" << m.d_model << " ffn=" << m.ffn << " heads=" << m.heads
     << " enc_layers=" << m.enc_layers << " dec_layers=" << m.dec_layers
     << " downsample=" << m.downsample << " n_mels=" << m.n_mels
     << " vocab_size=" << m.vocab_size << " n_classes=" << m.n_classes << "\n"
     << "step        " << c.step << "\n";
  if (!std::isnan(c.score)) os << "score       " << c.score_metric << " = " << c.score << "\n";
  if (!c.classes.empty()) {
    os << "classes    ";
    for (const auto& l : c.classes) os << ' ' << l;
    os << "\n";
  }
  if (!c.bpe_json.empty()) {
    os << "vocabulary  " << BpeVocab::FromJson(c.bpe_json).size() << " symbols\n";
  }
  os << "optimizer   "
     << (c.has_optimizer ? StrCat("adam t=", c.adam.t) : std::string("none")) << "\n"
     << "parameters  " << c.params.NumValues() << " values in " << c.params.size()
     << " arrays\n";
  for (const auto& [name, t] : c.params) {
    os << "  " << std::left << std::setw(40) << name << " [";
    for (std::size_t i = 0; i < t.shape().size(); ++i) os << (i ? "," : "") << t.shape()[i];
    os << "]\n";
  }
  os << "config\n" << c.config_ini;
}

}  // namespace mpc::commands
