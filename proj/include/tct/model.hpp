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

#include "tct/decoding.hpp"
#include "tct/tct_block.hpp"
#include "tct/vocab.hpp"

namespace tct {

// One dialogue training instance: history, question, dense video
// features, caption, summary, and the answer to generate. All token
// sequences are eos-terminated.
struct DialogueExample {
  std::string id;
  std::vector<std::vector<int>> history;
  std::vector<int> question;
  std::vector<int> caption;
  std::vector<int> summary;
  std::vector<int> answer;
  Tensor visual;  // [N_v, visual_dim]; undefined when the modality is off
  Tensor audio;   // [N_a, audio_dim]
};

struct ModelConfig {
  Index d_model = 32;
  int heads = 4;
  int tct_blocks = 1;  // translator depth M
  int decoder_layers = 2;
  int autoencoder_layers = 2;
  Index vocab_size = 0;
  Index visual_dim = 0;
  Index audio_dim = 0;
  bool use_visual = true;
  bool use_audio = true;

  Index d_hidden() const { return 4 * d_model; }
  bool visual_enabled() const { return use_visual && visual_dim > 0; }
  bool audio_enabled() const { return use_audio && audio_dim > 0; }
};

struct EncoderOutputs {
  Tensor question;  // [n_q, d]
  Tensor visual;    // [N_v, d] or undefined
  Tensor audio;     // [N_a, d] or undefined
};

struct CompositeLoss {
  Tensor total;    // answer + alpha * caption + beta * summary
  Tensor answer;
  Tensor caption;  // undefined when the visual pathway is off
  Tensor summary;
};

// Decoder layer: causal self-attention, cross-attention over the fused
// memory, feed-forward; post-norm residuals throughout.
struct DecoderLayer {
  MultiHeadAttention self_attn;
  MultiHeadAttention cross_attn;
  FeedForward ffn;
  LayerNorm norm_self, norm_cross, norm_ffn;

  DecoderLayer(Index d, int heads, Index d_hidden, Rng rng);
  Tensor forward(const Tensor& x, const Tensor& memory, const RunState& rs) const;
  void collect(NamedParams& out, const std::string& prefix) const;
};

// Diagnostic switches for gradient-path tests.
struct ForwardOptions {
  // Severs f_v_cap / z_his_sum before they join the decoder memory, so
  // translator parameters can only receive gradient through the
  // translation losses.
  bool detach_translator_memory = false;
};

// Full dialogue model: encoder, video-caption translator, dialogue-summary
// translator, query-aware auto-encoder, and a transformer decoder over the
// fused memory [question, g_v, g_a, f_v_cap, z_his_sum].
class MtnTct {
 public:
  MtnTct(const ModelConfig& cfg, Rng rng);

  EncoderOutputs encode(const DialogueExample& ex, const RunState& rs) const;

  struct TranslatorResult {
    Tensor representation;  // translator output sequence, [target_len, d]
    Tensor logits;          // vocabulary logits feeding the translation loss
  };
  TranslatorResult video_caption_translate(const Tensor& visual_encoded,
                                           const std::vector<int>& caption,
                                           const RunState& rs) const;
  TranslatorResult dialogue_summary_translate(const std::vector<std::vector<int>>& history,
                                              const std::vector<int>& summary,
                                              const RunState& rs) const;

  // Query-aware feature summaries (g_v, g_a), each of question length.
  std::pair<Tensor, Tensor> auto_encode(const Tensor& question_encoded,
                                        const EncoderOutputs& enc, const RunState& rs) const;

  // Teacher-forced answer logits [answer_len, vocab].
  Tensor decode_train(const DialogueExample& ex, const RunState& rs,
                      const ForwardOptions& opt = {}) const;

  CompositeLoss composite_loss(const DialogueExample& ex, double alpha, double beta,
                               const RunState& rs, const ForwardOptions& opt = {}) const;

  GenerationResult generate(const DialogueExample& ex, const DecodeConfig& decode) const;

  // Evaluation helpers (no tape, dropout off): summed answer token NLL
  // with the token count, and the count of teacher-forced argmax hits.
  std::pair<double, Index> answer_nll(const DialogueExample& ex) const;
  Index answer_argmax_matches(const DialogueExample& ex) const;

  NamedParams named_parameters() const;
  const ModelConfig& config() const { return cfg_; }

 private:
  struct Upstream {
    EncoderOutputs enc;
    Tensor caption_repr, caption_logits;
    Tensor summary_repr, summary_logits;
    Tensor g_visual, g_audio;
    Tensor memory;
  };

  Tensor embed_tokens(const std::vector<int>& ids, Index pe_offset = 0) const;
  Tensor vocab_logits(const Tensor& x) const;
  Upstream run_upstream(const DialogueExample& ex, const RunState& rs,
                        const ForwardOptions& opt) const;
  Tensor decoder_logits(const Tensor& memory, const std::vector<int>& shifted_answer,
                        const RunState& rs) const;
  void check_example(const DialogueExample& ex) const;

  ModelConfig cfg_;
  Tensor embedding_;                     // [vocab, d]
  SelfAttentionEncoder question_encoder_;
  Tensor visual_proj_w_, visual_proj_b_;
  Tensor audio_proj_w_, audio_proj_b_;
  TranslatorStack caption_translator_;
  HierarchicalTct summary_translator_;
  std::vector<MultiHeadAttention> autoenc_visual_;
  std::vector<MultiHeadAttention> autoenc_audio_;
  std::vector<DecoderLayer> decoder_;
  Tensor out_w_, out_b_;                 // shared vocabulary projection
  Tensor history_sentinel_;              // [1, d] stand-in for an empty history
};

}  // namespace tct
