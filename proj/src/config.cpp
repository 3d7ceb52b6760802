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


#include "mpc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mpc/error.hpp"

namespace mpc {

namespace pt = boost::property_tree;
using internal::StrCat;

const char* TaskName(TaskKind task) {
  switch (task) {
    case TaskKind::kPretrain: return "pretrain";
    case TaskKind::kTag: return "tag";
    case TaskKind::kSeq2Seq: return "seq2seq";
  }
  return "?";
}

TaskKind ParseTask(const std::string& name) {
  if (name == "pretrain") return TaskKind::kPretrain;
  if (name == "tag") return TaskKind::kTag;
  if (name == "seq2seq") return TaskKind::kSeq2Seq;
  throw ConfigError(StrCat("task.kind: expected pretrain, tag or seq2seq, got '", name, "'"));
}

model::HeadKind HeadForTask(TaskKind task) {
  switch (task) {
    case TaskKind::kPretrain: return model::HeadKind::kReconstruction;
    case TaskKind::kTag: return model::HeadKind::kTagging;
    case TaskKind::kSeq2Seq: return model::HeadKind::kSeq2Seq;
  }
  return model::HeadKind::kReconstruction;
}

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string FormatList(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += FormatDouble(v[i]);
  }
  return s;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Reads typed values out of a parsed tree and remembers which keys were
// consumed so that unknown keys can be reported.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  const std::string* Raw(const std::string& section, const std::string& key) {
    const auto s = tree_.find(section);
    if (s == tree_.not_found()) return nullptr;
    const auto k = s->second.find(key);
    if (k == s->second.not_found()) return nullptr;
    used_.insert(section + "." + key);
    values_[section + "." + key] = Trim(k->second.data());
    return &values_[section + "." + key];
  }

  void String(const std::string& section, const std::string& key, std::string& out) {
    if (const auto* v = Raw(section, key)) out = *v;
  }

  template <typename T>
  void Integer(const std::string& section, const std::string& key, T& out, T min) {
    const auto* v = Raw(section, key);
    if (!v) return;
    T parsed{};
    const auto r = std::from_chars(v->data(), v->data() + v->size(), parsed);
    if (r.ec != std::errc() || r.ptr != v->data() + v->size() || parsed < min) {
      throw ConfigError(StrCat(section, ".", key, ": expected an integer >= ", min,
                               ", got '", *v, "'"));
    }
    out = parsed;
  }

  void Double(const std::string& section, const std::string& key, double& out) {
    const auto* v = Raw(section, key);
    if (v) out = ParseDouble(section, key, *v);
  }

  void Bool(const std::string& section, const std::string& key, bool& out) {
    const auto* v = Raw(section, key);
    if (!v) return;
    if (*v == "true" || *v == "1") {
      out = true;
    } else if (*v == "false" || *v == "0") {
      out = false;
    } else {
      throw ConfigError(StrCat(section, ".", key, ": expected true or false, got '", *v, "'"));
    }
  }

  void DoubleList(const std::string& section, const std::string& key,
                  std::vector<double>& out) {
    const auto* v = Raw(section, key);
    if (!v) return;
    out.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = Trim(item);
      if (!item.empty()) out.push_back(ParseDouble(section, key, item));
    }
  }

  void Path(const std::string& section, const std::string& key,
            const std::filesystem::path& base, std::filesystem::path& out) {
    const auto* v = Raw(section, key);
    if (!v) return;
    if (v->empty()) {
      out.clear();
      return;
    }
    std::filesystem::path p(*v);
    out = (p.is_relative() && !base.empty()) ? (base / p).lexically_normal() : p;
  }

  void RejectUnknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(StrCat("config: key '", section, "' must be inside a section"));
      }
      for (const auto& [key, value] : body) {
        if (!used_.count(section + "." + key)) {
          throw ConfigError(StrCat(section, ".", key, ": unknown key"));
        }
      }
    }
  }

 private:
  static double ParseDouble(const std::string& section, const std::string& key,
                            const std::string& v) {
    double parsed = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), parsed);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
      throw ConfigError(StrCat(section, ".", key, ": expected a number, got '", v, "'"));
    }
    return parsed;
  }

  const pt::ptree& tree_;
  std::set<std::string> used_;
  std::map<std::string, std::string> values_;
};

}  // namespace

RunConfig RunConfig::Defaults(TaskKind task) {
  RunConfig c;
  c.task = task;
  if (task == TaskKind::kSeq2Seq) {
    c.schedule.k = 2.5;
    c.schedule.warmup_n = 25000;
  }
  c.schedule.d_model = static_cast<int>(c.model.d_model);
  return c;
}

RunConfig RunConfig::FromIniString(const std::string& text,
                                   const std::filesystem::path& base_dir) {
  // Full-line '#' comments are accepted in addition to ';'.
  std::stringstream cleaned;
  {
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = Trim(line);
      cleaned << (t.starts_with('#') ? std::string() : line) << '\n';
    }
  }
  pt::ptree tree;
  try {
    pt::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(StrCat("config: line ", e.line(), ": ", e.message()));
  }
  Reader r(tree);

  std::string kind = "pretrain";
  r.String("task", "kind", kind);
  RunConfig c = Defaults(ParseTask(kind));
  r.Integer("task", "seed", c.seed, std::uint64_t{0});

  auto& f = c.frontend;
  r.Integer("frontend", "sample_rate", f.sample_rate, 1);
  r.Double("frontend", "window_ms", f.window_ms);
  r.Double("frontend", "hop_ms", f.hop_ms);
  r.Integer("frontend", "n_mels", f.n_mels, 1);
  r.Integer("frontend", "fft_size", f.fft_size, 1);
  r.Double("frontend", "fmin", f.fmin);
  r.Double("frontend", "fmax", f.fmax);
  r.Double("frontend", "log_floor", f.log_floor);
  r.Bool("frontend", "normalize", f.normalize);
  r.DoubleList("frontend", "speed_factors", c.speed_factors);

  auto& m = c.model;
  r.Integer("model", "d_model", m.d_model, std::size_t{1});
  r.Integer("model", "ffn", m.ffn, std::size_t{1});
  r.Integer("model", "heads", m.heads, std::size_t{1});
  r.Double("model", "dropout", m.dropout);
  r.Integer("model", "enc_layers", m.enc_layers, std::size_t{0});
  r.Integer("model", "dec_layers", m.dec_layers, std::size_t{0});
  r.Integer("model", "downsample", m.downsample, std::size_t{1});
  m.n_mels = static_cast<std::size_t>(f.n_mels);

  r.Double("schedule", "k", c.schedule.k);
  r.Integer("schedule", "warmup_n", c.schedule.warmup_n, std::int64_t{1});
  r.Double("schedule", "d_model_exponent", c.schedule.d_model_exponent);
  c.schedule.d_model = static_cast<int>(m.d_model);

  auto& t = c.train;
  r.Integer("train", "batch_size", t.batch_size, std::size_t{1});
  r.Integer("train", "epochs", t.epochs, std::size_t{0});
  r.Integer("train", "max_steps", t.max_steps, std::int64_t{0});
  r.Double("train", "mask_rate", t.mask_rate);
  std::string mode = pretrain::LossModeName(t.loss_mode);
  r.String("train", "loss_mode", mode);
  try {
    t.loss_mode = pretrain::ParseLossMode(mode);
  } catch (const Error& e) {
    throw ConfigError(StrCat("train.loss_mode: ", e.what()));
  }
  r.Double("train", "label_smoothing", t.label_smoothing);
  r.Integer("train", "beam", t.beam, std::size_t{1});
  r.Integer("train", "max_len", t.max_len, std::size_t{1});
  r.Integer("train", "eval_beam", t.eval_beam, std::size_t{1});
  r.Integer("train", "checkpoint_every", t.checkpoint_every, std::int64_t{1});
  r.Integer("train", "log_every", t.log_every, std::int64_t{1});
  r.Integer("train", "average_best", t.average_best, std::size_t{1});
  r.Integer("train", "bpe_vocab_size", t.bpe_vocab_size, std::size_t{1});

  r.Path("paths", "train_manifest", base_dir, c.paths.train_manifest);
  r.Path("paths", "dev_manifest", base_dir, c.paths.dev_manifest);
  r.Path("paths", "out_dir", base_dir, c.paths.out_dir);
  r.Path("paths", "feature_cache", base_dir, c.paths.feature_cache);

  r.RejectUnknown();
  c.Validate(false);
  return c;
}

RunConfig RunConfig::FromIniFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(StrCat("config: cannot read ", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return FromIniString(ss.str(), std::filesystem::absolute(path).parent_path());
}

std::string RunConfig::ToIni() const {
  std::ostringstream o;
  o << "[task]\nkind = " << TaskName(task) << "\nseed = " << seed << "\n\n";
  o << "[frontend]\nsample_rate = " << frontend.sample_rate
    << "\nwindow_ms = " << FormatDouble(frontend.window_ms)
    << "\nhop_ms = " << FormatDouble(frontend.hop_ms)
    << "\nn_mels = " << frontend.n_mels << "\nfft_size = " << frontend.fft_size
    << "\nfmin = " << FormatDouble(frontend.fmin)
    << "\nfmax = " << FormatDouble(frontend.fmax)
    << "\nlog_floor = " << FormatDouble(frontend.log_floor)
    << "\nnormalize = " << (frontend.normalize ? "true" : "false")
    << "\nspeed_factors = " << FormatList(speed_factors) << "\n\n";
  o << "[model]\nd_model = " << model.d_model << "\nffn = " << model.ffn
    << "\nheads = " << model.heads << "\ndropout = " << FormatDouble(model.dropout)
    << "\nenc_layers = " << model.enc_layers << "\ndec_layers = " << model.dec_layers
    << "\ndownsample = " << model.downsample << "\n\n";
  o << "[schedule]\nk = " << FormatDouble(schedule.k) << "\nwarmup_n = " << schedule.warmup_n
    << "\nd_model_exponent = " << FormatDouble(schedule.d_model_exponent) << "\n\n";
  o << "[train]\nbatch_size = " << train.batch_size << "\nepochs = " << train.epochs
    << "\nmax_steps = " << train.max_steps
    << "\nmask_rate = " << FormatDouble(train.mask_rate)
    << "\nloss_mode = " << pretrain::LossModeName(train.loss_mode)
    << "\nlabel_smoothing = " << FormatDouble(train.label_smoothing)
    << "\nbeam = " << train.beam << "\nmax_len = " << train.max_len
    << "\neval_beam = " << train.eval_beam
    << "\ncheckpoint_every = " << train.checkpoint_every
    << "\nlog_every = " << train.log_every << "\naverage_best = " << train.average_best
    << "\nbpe_vocab_size = " << train.bpe_vocab_size << "\n\n";
  o << "[paths]\ntrain_manifest = " << paths.train_manifest.string()
    << "\ndev_manifest = " << paths.dev_manifest.string()
    << "\nout_dir = " << paths.out_dir.string()
    << "\nfeature_cache = " << paths.feature_cache.string() << "\n";
  return o.str();
}

void RunConfig::Validate(bool check_paths) const {
  try {
    frontend.Validate();
  } catch (const Error& e) {
    throw ConfigError(StrCat("frontend: ", e.what()));
  }
  for (double s : speed_factors) {
    if (!(s > 0.0)) {
      throw ConfigError(StrCat("frontend.speed_factors: factors must be > 0, got ", s));
    }
  }
  if (model.n_mels != static_cast<std::size_t>(frontend.n_mels)) {
    throw ConfigError("model: n_mels must equal frontend.n_mels");
  }
  try {
    model.Validate(model::HeadKind::kReconstruction);
  } catch (const Error& e) {
    throw ConfigError(StrCat("model: ", e.what()));
  }
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) {
    throw ConfigError(StrCat("model.dropout: must be in [0, 1), got ", model.dropout));
  }
  if (task == TaskKind::kSeq2Seq && model.dec_layers == 0) {
    throw ConfigError("model.dec_layers: seq2seq needs at least one decoder layer");
  }
  schedule.Validate();
  if (schedule.d_model != static_cast<int>(model.d_model)) {
    throw ConfigError("schedule: d_model must equal model.d_model");
  }
  if (train.epochs == 0 && train.max_steps == 0) {
    throw ConfigError("train: one of epochs or max_steps must be positive");
  }
  if (!(train.mask_rate > 0.0 && train.mask_rate <= 1.0)) {
    throw ConfigError(StrCat("train.mask_rate: must be in (0, 1], got ", train.mask_rate));
  }
  if (!(train.label_smoothing >= 0.0 && train.label_smoothing < 1.0)) {
    throw ConfigError(StrCat("train.label_smoothing: must be in [0, 1), got ",
                             train.label_smoothing));
  }
  if (paths.train_manifest.empty()) throw ConfigError("paths.train_manifest: required");
  if (check_paths) {
    if (!std::filesystem::is_regular_file(paths.train_manifest)) {
      throw ConfigError(StrCat("paths.train_manifest: no such file ",
                               paths.train_manifest.string()));
    }
    if (!paths.dev_manifest.empty() && !std::filesystem::is_regular_file(paths.dev_manifest)) {
      throw ConfigError(StrCat("paths.dev_manifest: no such file ",
                               paths.dev_manifest.string()));
    }
    if (paths.out_dir.empty()) throw ConfigError("paths.out_dir: required");
  }
}

std::vector<std::string> DiffModelConfig(const model::ModelConfig& expected,
                                         const model::ModelConfig& found) {
  std::vector<std::string> out;
  auto cmp = [&](const char* key, auto a, auto b) {
    if (a != b) out.push_back(StrCat("model.", key, ": expected ", a, ", found ", b));
  };
  cmp("d_model", expected.d_model, found.d_model);
  cmp("ffn", expected.ffn, found.ffn);
  cmp("heads", expected.heads, found.heads);
  cmp("enc_layers", expected.enc_layers, found.enc_layers);
  cmp("dec_layers", expected.dec_layers, found.dec_layers);
  cmp("downsample", expected.downsample, found.downsample);
  cmp("n_mels", expected.n_mels, found.n_mels);
  cmp("vocab_size", expected.vocab_size, found.vocab_size);
  cmp("n_classes", expected.n_classes, found.n_classes);
  return out;
}

}  // namespace mpc
