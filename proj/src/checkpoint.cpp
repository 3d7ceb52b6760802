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


#include "mpc/checkpoint.hpp"

#include <cmath>

#include "mpc/config.hpp"
#include "mpc/container.hpp"
#include "mpc/error.hpp"

namespace mpc {

using internal::StrCat;
using nlohmann::json;

namespace {

constexpr const char* kParam = "param/";
constexpr const char* kMoment1 = "adam.m/";
constexpr const char* kMoment2 = "adam.v/";

json ModelToJson(const model::ModelConfig& m) {
  return {{"d_model", m.d_model},       {"ffn", m.ffn},
          {"heads", m.heads},           {"dropout", m.dropout},
          {"enc_layers", m.enc_layers}, {"dec_layers", m.dec_layers},
          {"downsample", m.downsample}, {"n_mels", m.n_mels},
          {"vocab_size", m.vocab_size}, {"n_classes", m.n_classes}};
}

model::ModelConfig ModelFromJson(const json& j) {
  model::ModelConfig m;
  m.d_model = j.at("d_model");
  m.ffn = j.at("ffn");
  m.heads = j.at("heads");
  m.dropout = j.at("dropout");
  m.enc_layers = j.at("enc_layers");
  m.dec_layers = j.at("dec_layers");
  m.downsample = j.at("downsample");
  m.n_mels = j.at("n_mels");
  m.vocab_size = j.at("vocab_size");
  m.n_classes = j.at("n_classes");
  return m;
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Container c;
  c.meta = {{"kind", "checkpoint"},
            {"head", model::HeadName(ckpt.head)},
            {"model", ModelToJson(ckpt.model)},
            {"config", ckpt.config_ini},
            {"step", ckpt.step},
            {"score", std::isnan(ckpt.score) ? json() : json(ckpt.score)},
            {"score_metric", ckpt.score_metric},
            {"classes", ckpt.classes},
            {"bpe", ckpt.bpe_json}};
  if (ckpt.has_optimizer) {
    c.meta["adam"] = {{"beta1", ckpt.adam.beta1},
                      {"beta2", ckpt.adam.beta2},
                      {"epsilon", ckpt.adam.epsilon},
                      {"t", ckpt.adam.t}};
  }
  for (const auto& [name, t] : ckpt.params) {
    c.arrays.push_back({kParam + name, t.shape(), {t.data().begin(), t.data().end()}});
  }
  if (ckpt.has_optimizer) {
    for (const auto& [name, m] : ckpt.adam.m) {
      c.arrays.push_back({kMoment1 + name, {m.size()}, m});
    }
    for (const auto& [name, v] : ckpt.adam.v) {
      c.arrays.push_back({kMoment2 + name, {v.size()}, v});
    }
  }
  SaveContainer(path, c);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  Container c = LoadContainer(path);
  Checkpoint ckpt;
  try {
    const json& m = c.meta;
    if (m.value("kind", "") != "checkpoint") {
      throw CheckpointError(StrCat(path.string(), ": not a model checkpoint"));
    }
    ckpt.head = model::ParseHead(m.at("head").get<std::string>());
    ckpt.model = ModelFromJson(m.at("model"));
    ckpt.config_ini = m.at("config").get<std::string>();
    ckpt.step = m.at("step").get<std::int64_t>();
    if (!m.at("score").is_null()) ckpt.score = m.at("score").get<double>();
    ckpt.score_metric = m.at("score_metric").get<std::string>();
    ckpt.classes = m.at("classes").get<std::vector<std::string>>();
    ckpt.bpe_json = m.at("bpe").get<std::string>();
    if (m.contains("adam")) {
      ckpt.has_optimizer = true;
      ckpt.adam.beta1 = m["adam"].at("beta1");
      ckpt.adam.beta2 = m["adam"].at("beta2");
      ckpt.adam.epsilon = m["adam"].at("epsilon");
      ckpt.adam.t = m["adam"].at("t");
    }
  } catch (const json::exception& e) {
    throw CheckpointError(StrCat(path.string(), ": bad metadata: ", e.what()));
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(StrCat(path.string(), ": ", e.what()));
  }
  for (auto& a : c.arrays) {
    const std::string& n = a.name;
    if (n.starts_with(kParam)) {
      ckpt.params.Add(n.substr(6), Tensor::FromData(a.shape, std::move(a.values)));
    } else if (n.starts_with(kMoment1)) {
      ckpt.adam.m[n.substr(7)] = std::move(a.values);
    } else if (n.starts_with(kMoment2)) {
      ckpt.adam.v[n.substr(7)] = std::move(a.values);
    } else {
      throw CheckpointError(StrCat(path.string(), ": unexpected array '", n, "'"));
    }
  }
  return ckpt;
}

void RequireModelConfig(const Checkpoint& ckpt, const model::ModelConfig& expected) {
  const auto diff = DiffModelConfig(expected, ckpt.model);
  if (diff.empty()) return;
  std::string msg = "checkpoint model configuration differs:";
  for (const auto& line : diff) msg += "\n  " + line;
  throw CheckpointError(msg);
}

}  // namespace mpc
