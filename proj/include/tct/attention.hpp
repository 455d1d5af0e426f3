// Copyright 2026 The TCT Authors
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

#pragma once

#include <functional>

#include "tct/ops.hpp"

namespace tct {

// Additive mask value; finite so masked logits stay well-defined, large
// enough that the masked weights underflow to exactly zero.
inline constexpr double kMaskLogit = -1e9;

enum class MaskKind { None, Causal, Padding, CausalPadding };

struct AttentionMask {
  MaskKind kind = MaskKind::None;
  std::vector<uint8_t> key_padding;  // 1 = padded key position

  static AttentionMask none() { return {}; }
  static AttentionMask causal() { return {MaskKind::Causal, {}}; }
  static AttentionMask padding(std::vector<uint8_t> padded) {
    return {MaskKind::Padding, std::move(padded)};
  }
  static AttentionMask causal_padding(std::vector<uint8_t> padded) {
    return {MaskKind::CausalPadding, std::move(padded)};
  }

  bool is_causal() const { return kind == MaskKind::Causal || kind == MaskKind::CausalPadding; }
  bool has_padding() const { return kind == MaskKind::Padding || kind == MaskKind::CausalPadding; }
  // Padding component alone (what cross-attention over the sequence sees).
  AttentionMask padding_only() const {
    return has_padding() ? padding(key_padding) : none();
  }
  bool blocks(Index q, Index k) const;
  // [n_query, n_key] additive logit matrix of 0 / kMaskLogit entries.
  // Rejects query rows whose keys are all masked.
  Tensor additive(Index n_query, Index n_key) const;
};

// softmax(Q Kᵀ / sqrt(d_k)) V. Masked keys get exactly zero weight.
Tensor scaled_dot_attention(const Tensor& query, const Tensor& key, const Tensor& value,
                            const AttentionMask& mask);

// Dropout setting for one forward pass. Evaluation passes keep the
// defaults; training passes carry the shared step generator.
struct RunState {
  double dropout = 0.0;
  bool training = false;
  Rng* rng = nullptr;

  static RunState eval() { return {}; }
  static RunState train(double p, Rng* rng) { return {p, true, rng}; }
};

Tensor xavier_uniform(Shape shape, Rng rng);

struct MultiHeadAttention {
  int heads = 1;
  Index d_model = 0;
  Index d_head = 0;
  std::vector<Tensor> w_query, w_key, w_value;  // per head, [d_model, d_head]
  Tensor w_out;                                 // [d_model, d_model]

  MultiHeadAttention(Index d, int heads, Rng rng);
  Tensor forward(const Tensor& query, const Tensor& key, const Tensor& value,
                 const AttentionMask& mask) const;
  void collect(NamedParams& out, const std::string& prefix) const;
};

// o = relu(x W1 + b1) W2 + b2
struct FeedForward {
  Tensor w1, b1, w2, b2;

  FeedForward(Index d, Index d_hidden, Rng rng);
  Tensor forward(const Tensor& x) const;
  void collect(NamedParams& out, const std::string& prefix) const;
};

struct LayerNorm {
  Tensor gain, bias;
  double eps = 1e-9;

  explicit LayerNorm(Index d);
  Tensor forward(const Tensor& x) const { return layer_norm(x, gain, bias, eps); }
  void collect(NamedParams& out, const std::string& prefix) const;
};

// Post-norm residual wrapper: layer_norm(x + dropout(f(x))).
Tensor sublayer(const Tensor& x, const std::function<Tensor(const Tensor&)>& f,
                const LayerNorm& norm, const RunState& rs);

// Sinusoidal table; row t holds interleaved sin/cos at geometrically
// spaced frequencies. Constant, values in [-1, 1].
Tensor positional_encoding(Index length, Index dim);
// Rows [offset, offset + length) of the same table.
Tensor positional_encoding_slice(Index offset, Index length, Index dim);

}  // namespace tct
