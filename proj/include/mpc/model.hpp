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


// Transformer encoder with a convolutional downsampling frontend, and the
// three heads built on it: frame reconstruction, pooled classification and
// an autoregressive Transformer decoder.
//
// Tensors are batch-major: features [B, T, n_mels], encoder states
// [B, T', d_model] with T' = ceil(T / N). Positions at or beyond an
// element's valid length are padding and are never attended or pooled.

#ifndef MPC_MODEL_HPP_
#define MPC_MODEL_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "mpc/parameters.hpp"
#include "mpc/rng.hpp"
#include "mpc/tensor.hpp"

namespace mpc::model {

enum class HeadKind { kReconstruction, kTagging, kSeq2Seq };

const char* HeadName(HeadKind head);
HeadKind ParseHead(const std::string& name);

struct ModelConfig {
  std::size_t d_model = 256;
  std::size_t ffn = 2048;
  std::size_t heads = 4;
  double dropout = 0.1;
  std::size_t enc_layers = 12;
  std::size_t dec_layers = 6;
  std::size_t downsample = 4;  // a power of two; one stride-2 conv per factor
  std::size_t n_mels = 40;
  std::size_t vocab_size = 0;  // seq2seq head only
  std::size_t n_classes = 0;   // tagging head only

  // Checks the trunk and, for `head`, the head-specific size.
  void Validate(HeadKind head) const;
  std::size_t NumConvLayers() const;
  std::size_t EncodedLength(std::size_t frames) const {
    return (frames + downsample - 1) / downsample;
  }
};

struct EncoderOutput {
  Tensor states;                          // [B, T', d_model]
  std::vector<std::size_t> valid_lengths;  // per element, in encoder positions
};

// Target token ids, row-major [batch, length].
struct TokenBatch {
  std::vector<int> ids;
  std::size_t batch = 0;
  std::size_t length = 0;
};

// Xavier-uniform matrices, zero biases, unit layer-norm gains. Creates the
// frontend, the encoder and the parameters of `head`.
ParameterSet InitParameters(const ModelConfig& cfg, HeadKind head, Rng& rng);
// Adds freshly initialized parameters for `head` to an existing trunk.
void InitHead(ParameterSet& params, const ModelConfig& cfg, HeadKind head,
              Rng& rng);
// True for parameters that belong to the frontend or the encoder.
bool IsTrunkParameter(const std::string& name);

// [T, d] sinusoidal table.
Tensor PositionalEncoding(std::size_t length, std::size_t d_model);

// Right-pads the time axis with zero frames to a multiple of `downsample`,
// applies the convolutions and projection, and adds positional encoding.
Tensor ConvFrontend(const ParameterSet& params, const ModelConfig& cfg,
                    const Tensor& features);

// Multi-head attention. `mask` broadcasts to [B, heads, Tq, Tk]; nonzero
// entries are excluded. When `weights` is non-null it receives the
// post-softmax attention weights.
Tensor MultiHeadAttention(const ParameterSet& params, const std::string& prefix,
                          const ModelConfig& cfg, const Tensor& query,
                          const Tensor& memory, const Tensor& mask,
                          Tensor* weights = nullptr);

// [B, 1, 1, T] mask with ones at padding positions.
Tensor KeyPaddingMask(const std::vector<std::size_t>& valid_lengths,
                      std::size_t length);
// [1, 1, L, L] mask with ones above the diagonal.
Tensor CausalMask(std::size_t length);

EncoderOutput EncoderForward(const ParameterSet& params, const ModelConfig& cfg,
                             const Tensor& states,
                             std::vector<std::size_t> valid_lengths, bool train,
                             Rng& rng);

// Frontend followed by the encoder; `frame_lengths` counts valid frames.
EncoderOutput Encode(const ParameterSet& params, const ModelConfig& cfg,
                     const Tensor& features,
                     const std::vector<std::size_t>& frame_lengths, bool train,
                     Rng& rng);

// [B, num_frames, n_mels]: encoder position c predicts frames [cN, (c+1)N).
Tensor ReconstructionHead(const ParameterSet& params, const ModelConfig& cfg,
                          const EncoderOutput& enc, std::size_t num_frames);

// [B, n_classes] logits from the mean of the valid encoder states.
Tensor PoolingHead(const ParameterSet& params, const ModelConfig& cfg,
                   const EncoderOutput& enc);

// [B, L, vocab_size] logits; targets[:, 0] is the start token.
Tensor DecoderForward(const ParameterSet& params, const ModelConfig& cfg,
                      const EncoderOutput& enc, const TokenBatch& targets,
                      bool train, Rng& rng);

}  // namespace mpc::model

#endif  // MPC_MODEL_HPP_
