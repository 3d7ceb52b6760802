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


#include "mpc/model.hpp"

#include <cmath>
#include <limits>

#include "mpc/error.hpp"
#include "mpc/ops.hpp"

namespace mpc::model {

using internal::StrCat;

namespace {

bool IsPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Tensor XavierUniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                     Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(NumElements(shape));
  for (double& v : data) v = rng.Uniform(-limit, limit);
  return Tensor::FromData(std::move(shape), std::move(data));
}

void AddLinear(ParameterSet& p, const std::string& name, std::size_t in,
               std::size_t out, Rng& rng) {
  p.Add(name + ".weight", XavierUniform({in, out}, in, out, rng));
  p.Add(name + ".bias", Tensor::Zeros({out}));
}

void AddNorm(ParameterSet& p, const std::string& name, std::size_t d) {
  p.Add(name + ".gamma", Tensor::Full({d}, 1.0));
  p.Add(name + ".beta", Tensor::Zeros({d}));
}

void AddAttention(ParameterSet& p, const std::string& name, std::size_t d,
                  Rng& rng) {
  for (const char* proj : {"q", "k", "v", "o"}) {
    AddLinear(p, StrCat(name, ".", proj), d, d, rng);
  }
}

Tensor Linear(const ParameterSet& p, const std::string& name, const Tensor& x) {
  return Add(MatMul(x, p.Get(name + ".weight")), p.Get(name + ".bias"));
}

Tensor Norm(const ParameterSet& p, const std::string& name, const Tensor& x) {
  return LayerNorm(x, p.Get(name + ".gamma"), p.Get(name + ".beta"));
}

Tensor FeedForward(const ParameterSet& p, const std::string& name,
                   const Tensor& x) {
  return Linear(p, name + ".fc2", Relu(Linear(p, name + ".fc1", x)));
}

std::string EncoderLayer(std::size_t l) { return StrCat("encoder.layers.", l); }
std::string DecoderLayer(std::size_t l) { return StrCat("decoder.layers.", l); }

}  // namespace

const char* HeadName(HeadKind head) {
  switch (head) {
    case HeadKind::kReconstruction: return "reconstruction";
    case HeadKind::kTagging: return "tagging";
    case HeadKind::kSeq2Seq: return "seq2seq";
  }
  return "unknown";
}

HeadKind ParseHead(const std::string& name) {
  if (name == "reconstruction") return HeadKind::kReconstruction;
  if (name == "tagging") return HeadKind::kTagging;
  if (name == "seq2seq") return HeadKind::kSeq2Seq;
  throw ConfigError(StrCat("unknown head '", name, "'"));
}

void ModelConfig::Validate(HeadKind head) const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw ConfigError(StrCat("model: d_model ", d_model,
                             " must be a positive multiple of heads ", heads));
  }
  if (ffn == 0) throw ConfigError("model: ffn must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError(StrCat("model: dropout ", dropout, " outside [0, 1)"));
  }
  if (enc_layers == 0) throw ConfigError("model: enc_layers must be >= 1");
  if (!IsPowerOfTwo(downsample)) {
    throw ConfigError(StrCat("model: downsample ", downsample,
                             " must be a power of two"));
  }
  if (n_mels == 0) throw ConfigError("model: n_mels must be >= 1");
  switch (head) {
    case HeadKind::kReconstruction:
      break;
    case HeadKind::kTagging:
      if (n_classes < 2) {
        throw ConfigError(StrCat("model: tagging needs n_classes >= 2, got ",
                                 n_classes));
      }
      if (vocab_size != 0) {
        throw ConfigError("model: vocab_size must be unset for tagging");
      }
      break;
    case HeadKind::kSeq2Seq:
      if (vocab_size < 4) {
        throw ConfigError(StrCat("model: seq2seq needs vocab_size >= 4, got ",
                                 vocab_size));
      }
      if (n_classes != 0) {
        throw ConfigError("model: n_classes must be unset for seq2seq");
      }
      if (dec_layers == 0) throw ConfigError("model: dec_layers must be >= 1");
      break;
  }
}

std::size_t ModelConfig::NumConvLayers() const {
  std::size_t n = 0;
  for (std::size_t f = downsample; f > 1; f >>= 1) ++n;
  return n;
}

ParameterSet InitParameters(const ModelConfig& cfg, HeadKind head, Rng& rng) {
  cfg.Validate(head);
  ParameterSet p;
  const std::size_t d = cfg.d_model;
  std::size_t channels = cfg.n_mels;
  for (std::size_t i = 0; i < cfg.NumConvLayers(); ++i) {
    p.Add(StrCat("frontend.conv", i, ".weight"),
          XavierUniform({3, channels, d}, 3 * channels, 3 * d, rng));
    p.Add(StrCat("frontend.conv", i, ".bias"), Tensor::Zeros({d}));
    channels = d;
  }
  AddLinear(p, "frontend.proj", channels, d, rng);
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    const std::string name = EncoderLayer(l);
    AddNorm(p, name + ".norm1", d);
    AddAttention(p, name + ".attn", d, rng);
    AddNorm(p, name + ".norm2", d);
    AddLinear(p, name + ".ffn.fc1", d, cfg.ffn, rng);
    AddLinear(p, name + ".ffn.fc2", cfg.ffn, d, rng);
  }
  AddNorm(p, "encoder.final_norm", d);
  InitHead(p, cfg, head, rng);
  return p;
}

void InitHead(ParameterSet& p, const ModelConfig& cfg, HeadKind head,
              Rng& rng) {
  cfg.Validate(head);
  const std::size_t d = cfg.d_model;
  switch (head) {
    case HeadKind::kReconstruction:
      AddLinear(p, "recon.proj", d, cfg.downsample * cfg.n_mels, rng);
      break;
    case HeadKind::kTagging:
      AddLinear(p, "tag.proj", d, cfg.n_classes, rng);
      break;
    case HeadKind::kSeq2Seq:
      p.Add("decoder.embed",
            XavierUniform({cfg.vocab_size, d}, cfg.vocab_size, d, rng));
      for (std::size_t l = 0; l < cfg.dec_layers; ++l) {
        const std::string name = DecoderLayer(l);
        AddNorm(p, name + ".norm1", d);
        AddAttention(p, name + ".self_attn", d, rng);
        AddNorm(p, name + ".norm2", d);
        AddAttention(p, name + ".cross_attn", d, rng);
        AddNorm(p, name + ".norm3", d);
        AddLinear(p, name + ".ffn.fc1", d, cfg.ffn, rng);
        AddLinear(p, name + ".ffn.fc2", cfg.ffn, d, rng);
      }
      AddNorm(p, "decoder.final_norm", d);
      AddLinear(p, "decoder.out", d, cfg.vocab_size, rng);
      break;
  }
}

bool IsTrunkParameter(const std::string& name) {
  return name.starts_with("frontend.") || name.starts_with("encoder.");
}

Tensor PositionalEncoding(std::size_t length, std::size_t d_model) {
  std::vector<double> pe(length * d_model);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      pe[pos * d_model + i] = std::sin(angle);
      if (i + 1 < d_model) pe[pos * d_model + i + 1] = std::cos(angle);
    }
  }
  return Tensor::FromData({length, d_model}, std::move(pe));
}

Tensor ConvFrontend(const ParameterSet& params, const ModelConfig& cfg,
                    const Tensor& features) {
  if (features.rank() != 3 || features.dim(2) != cfg.n_mels ||
      features.dim(1) == 0) {
    throw ShapeError(StrCat("conv_frontend: expected [B, T>=1, ", cfg.n_mels,
                            "], got ", ShapeString(features.shape())));
  }
  const std::size_t batch = features.dim(0);
  const std::size_t frames = features.dim(1);
  const std::size_t padded = cfg.EncodedLength(frames) * cfg.downsample;
  Tensor x = features;
  if (padded != frames) {
    x = Concat({features, Tensor::Zeros({batch, padded - frames, cfg.n_mels})}, 1);
  }
  for (std::size_t i = 0; i < cfg.NumConvLayers(); ++i) {
    const std::string name = StrCat("frontend.conv", i);
    x = Relu(Conv1d(x, params.Get(name + ".weight"), params.Get(name + ".bias"),
                    Conv1dOptions::Same(x.dim(1), 3, 2)));
  }
  x = Linear(params, "frontend.proj", x);
  return Add(x, PositionalEncoding(x.dim(1), cfg.d_model));
}

Tensor KeyPaddingMask(const std::vector<std::size_t>& valid_lengths,
                      std::size_t length) {
  const std::size_t batch = valid_lengths.size();
  std::vector<double> m(batch * length, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = valid_lengths[b]; t < length; ++t) m[b * length + t] = 1.0;
  }
  return Tensor::FromData({batch, 1, 1, length}, std::move(m));
}

Tensor CausalMask(std::size_t length) {
  std::vector<double> m(length * length, 0.0);
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t j = i + 1; j < length; ++j) m[i * length + j] = 1.0;
  }
  return Tensor::FromData({1, 1, length, length}, std::move(m));
}

Tensor MultiHeadAttention(const ParameterSet& params, const std::string& prefix,
                          const ModelConfig& cfg, const Tensor& query,
                          const Tensor& memory, const Tensor& mask,
                          Tensor* weights) {
  const std::size_t batch = query.dim(0);
  const std::size_t tq = query.dim(1);
  const std::size_t tk = memory.dim(1);
  const std::size_t h = cfg.heads;
  const std::size_t dh = cfg.d_model / h;
  auto split = [&](const Tensor& x, std::size_t len) {
    return Permute(Reshape(x, {batch, len, h, dh}), {0, 2, 1, 3});
  };
  const Tensor q = split(Linear(params, prefix + ".q", query), tq);
  const Tensor k = split(Linear(params, prefix + ".k", memory), tk);
  const Tensor v = split(Linear(params, prefix + ".v", memory), tk);
  Tensor scores = Scale(MatMul(q, k, /*transpose_b=*/true),
                        1.0 / std::sqrt(static_cast<double>(dh)));
  scores = MaskedFill(scores, mask, -std::numeric_limits<double>::infinity());
  const Tensor attn = Softmax(scores, -1);
  if (weights != nullptr) *weights = attn;
  const Tensor ctx = Reshape(Permute(MatMul(attn, v), {0, 2, 1, 3}),
                             {batch, tq, cfg.d_model});
  return Linear(params, prefix + ".o", ctx);
}

EncoderOutput EncoderForward(const ParameterSet& params, const ModelConfig& cfg,
                             const Tensor& states,
                             std::vector<std::size_t> valid_lengths, bool train,
                             Rng& rng) {
  if (states.rank() != 3 || states.dim(2) != cfg.d_model) {
    throw ShapeError(StrCat("encoder: expected [B, T, ", cfg.d_model, "], got ",
                            ShapeString(states.shape())));
  }
  const std::size_t len = states.dim(1);
  if (valid_lengths.size() != states.dim(0)) {
    throw ShapeError(StrCat("encoder: ", valid_lengths.size(),
                            " valid lengths for a batch of ", states.dim(0)));
  }
  for (std::size_t b = 0; b < valid_lengths.size(); ++b) {
    if (valid_lengths[b] > len) {
      throw ShapeError(StrCat("encoder: valid length ", valid_lengths[b],
                              " of element ", b, " exceeds ", len,
                              " encoder positions"));
    }
  }
  const Tensor mask = KeyPaddingMask(valid_lengths, len);
  Tensor x = Dropout(states, cfg.dropout, train, rng);
  for (std::size_t l = 0; l < cfg.enc_layers; ++l) {
    const std::string name = EncoderLayer(l);
    Tensor h = Norm(params, name + ".norm1", x);
    h = MultiHeadAttention(params, name + ".attn", cfg, h, h, mask);
    x = Add(x, Dropout(h, cfg.dropout, train, rng));
    h = FeedForward(params, name + ".ffn", Norm(params, name + ".norm2", x));
    x = Add(x, Dropout(h, cfg.dropout, train, rng));
  }
  return {Norm(params, "encoder.final_norm", x), std::move(valid_lengths)};
}

EncoderOutput Encode(const ParameterSet& params, const ModelConfig& cfg,
                     const Tensor& features,
                     const std::vector<std::size_t>& frame_lengths, bool train,
                     Rng& rng) {
  std::vector<std::size_t> valid;
  valid.reserve(frame_lengths.size());
  for (std::size_t n : frame_lengths) {
    if (n > features.dim(1)) {
      throw ShapeError(StrCat("encode: frame length ", n, " exceeds padded ",
                              features.dim(1)));
    }
    valid.push_back(cfg.EncodedLength(n));
  }
  return EncoderForward(params, cfg, ConvFrontend(params, cfg, features),
                        std::move(valid), train, rng);
}

Tensor ReconstructionHead(const ParameterSet& params, const ModelConfig& cfg,
                          const EncoderOutput& enc, std::size_t num_frames) {
  const std::size_t batch = enc.states.dim(0);
  const std::size_t positions = enc.states.dim(1);
  if (num_frames > positions * cfg.downsample) {
    throw ShapeError(StrCat("reconstruction_head: ", num_frames,
                            " frames from ", positions, " positions"));
  }
  Tensor y = Linear(params, "recon.proj", enc.states);
  y = Reshape(y, {batch, positions * cfg.downsample, cfg.n_mels});
  if (num_frames != positions * cfg.downsample) y = Slice(y, 1, 0, num_frames);
  return y;
}

Tensor PoolingHead(const ParameterSet& params, const ModelConfig& cfg,
                   const EncoderOutput& enc) {
  const std::size_t batch = enc.states.dim(0);
  const std::size_t len = enc.states.dim(1);
  std::vector<double> w(batch * len, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t n = enc.valid_lengths[b];
    if (n == 0) {
      throw ShapeError(StrCat("pooling_head: element ", b,
                              " has no valid positions"));
    }
    for (std::size_t t = 0; t < n; ++t) w[b * len + t] = 1.0 / static_cast<double>(n);
  }
  const Tensor weights = Tensor::FromData({batch, 1, len}, std::move(w));
  const Tensor pooled = Reshape(MatMul(weights, enc.states), {batch, cfg.d_model});
  return Linear(params, "tag.proj", pooled);
}

Tensor DecoderForward(const ParameterSet& params, const ModelConfig& cfg,
                      const EncoderOutput& enc, const TokenBatch& targets,
                      bool train, Rng& rng) {
  if (targets.length == 0) throw ShapeError("decoder: target length is 0");
  if (targets.batch != enc.states.dim(0) ||
      targets.ids.size() != targets.batch * targets.length) {
    throw ShapeError(StrCat("decoder: token batch ", targets.batch, "x",
                            targets.length, " does not match encoder batch ",
                            enc.states.dim(0)));
  }
  const std::size_t d = cfg.d_model;
  Tensor x = Reshape(Embedding(params.Get("decoder.embed"), targets.ids),
                     {targets.batch, targets.length, d});
  x = Add(Scale(x, std::sqrt(static_cast<double>(d))),
          PositionalEncoding(targets.length, d));
  x = Dropout(x, cfg.dropout, train, rng);
  const Tensor causal = CausalMask(targets.length);
  const Tensor cross = KeyPaddingMask(enc.valid_lengths, enc.states.dim(1));
  for (std::size_t l = 0; l < cfg.dec_layers; ++l) {
    const std::string name = DecoderLayer(l);
    Tensor h = Norm(params, name + ".norm1", x);
    h = MultiHeadAttention(params, name + ".self_attn", cfg, h, h, causal);
    x = Add(x, Dropout(h, cfg.dropout, train, rng));
    h = Norm(params, name + ".norm2", x);
    h = MultiHeadAttention(params, name + ".cross_attn", cfg, h, enc.states, cross);
    x = Add(x, Dropout(h, cfg.dropout, train, rng));
    h = FeedForward(params, name + ".ffn", Norm(params, name + ".norm3", x));
    x = Add(x, Dropout(h, cfg.dropout, train, rng));
  }
  return Linear(params, "decoder.out", Norm(params, "decoder.final_norm", x));
}

}  // namespace mpc::model
