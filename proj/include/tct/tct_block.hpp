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

#include "tct/attention.hpp"

namespace tct {

// One cross-modal translator block. The target sequence runs through
// causal self-attention, the source through bidirectional self-attention;
// a translator attention then queries the source context with the target
// context, and two feed-forward sublayers finish the block. Every
// sublayer is wrapped in residual + layer norm.
struct TctBlock {
  MultiHeadAttention target_self_attn;
  MultiHeadAttention source_self_attn;
  MultiHeadAttention translator_attn;
  FeedForward ffn_target;
  FeedForward ffn_out;
  LayerNorm norm_target, norm_source, norm_translate, norm_ffn_target, norm_ffn_out;

  TctBlock(Index d, int heads, Index d_hidden, Rng rng);

  struct Outputs {
    Tensor target_ctx;  // after target self-attention
    Tensor source_ctx;  // after source self-attention
    Tensor translated;  // after translator attention
    Tensor out;         // after the two feed-forward sublayers
  };

  // target_mask applies to the target self-attention (causal, plus any
  // target padding); source_mask to the source self-attention. The
  // translator attention reuses source_mask's padding component.
  Outputs forward(const Tensor& target, const Tensor& source, const AttentionMask& target_mask,
                  const AttentionMask& source_mask, const RunState& rs) const;
  void collect(NamedParams& out, const std::string& prefix) const;
};

// M stacked blocks; block i+1 takes block i's output as its target input,
// all blocks read the same encoded source.
struct TranslatorStack {
  std::vector<TctBlock> blocks;

  TranslatorStack(int m, Index d, int heads, Index d_hidden, Rng rng);
  Tensor forward(const Tensor& target, const Tensor& source, const AttentionMask& target_mask,
                 const AttentionMask& source_mask, const RunState& rs) const;
  void collect(NamedParams& out, const std::string& prefix) const;
};

// Single self-attention encoder layer (residual + norm).
struct SelfAttentionEncoder {
  MultiHeadAttention attn;
  LayerNorm norm;

  SelfAttentionEncoder(Index d, int heads, Rng rng);
  Tensor forward(const Tensor& x, const AttentionMask& mask, const RunState& rs) const;
  void collect(NamedParams& out, const std::string& prefix) const;
};

// Two-level translator: utterances are word-level encoded independently,
// the representation at each terminal eos becomes one sentence-level
// source position, and a TranslatorStack translates the target against
// that sentence sequence.
struct HierarchicalTct {
  SelfAttentionEncoder word_encoder;
  TranslatorStack stack;

  HierarchicalTct(int m, Index d, int heads, Index d_hidden, Rng rng);

  struct Outputs {
    Tensor sentence_seq;  // [n_utterances, d]
    Tensor out;           // [target_len, d]
  };

  // utterances are embedded word sequences (one tensor per utterance,
  // positional offsets already applied); eos_index gives the terminal eos
  // position inside each utterance.
  Outputs forward(const Tensor& target, const AttentionMask& target_mask,
                  const std::vector<Tensor>& utterances, const std::vector<Index>& eos_index,
                  const RunState& rs) const;
  void collect(NamedParams& out, const std::string& prefix) const;
};

// A sequence in one modality: token ids or dense feature rows, plus
// per-position validity.
struct ModalitySequence {
  enum class Kind { Textual, Dense };

  Kind kind = Kind::Textual;
  std::vector<int> tokens;    // textual payload, eos-terminated
  Tensor features;            // dense payload [N, d_raw]
  std::vector<uint8_t> keep;  // 1 = real position; empty = all real

  static ModalitySequence textual(std::vector<int> tokens);
  static ModalitySequence dense(Tensor features);
  Index length() const;
  std::vector<uint8_t> keep_or_all() const;
};

enum class TranslationLossKind { Textual, DenseL1, DenseCosine };

// Textual: mean cross-entropy of the (already teacher-forced) logits
// against the target tokens, pad positions excluded. Dense: masked mean
// absolute error, or masked mean (1 - cosine similarity) per position.
Tensor translation_loss(TranslationLossKind kind, const Tensor& predicted,
                        const ModalitySequence& target, int pad_id);

}  // namespace tct
