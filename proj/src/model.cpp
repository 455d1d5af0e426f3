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

#include "tct/model.hpp"

#include <cmath>

namespace tct {
namespace {

std::vector<int> shift_right(const std::vector<int>& tokens) {
  std::vector<int> in;
  in.reserve(tokens.size());
  in.push_back(kSosId);
  in.insert(in.end(), tokens.begin(), tokens.size() > 1 ? tokens.end() - 1 : tokens.begin());
  return in;
}

void require_eos_terminated(const char* field, const std::vector<int>& tokens) {
  if (tokens.empty() || tokens.back() != kEosId) {
    throw CorpusError(std::string(field) + " sequence is not eos-terminated");
  }
}

}  // namespace

DecoderLayer::DecoderLayer(Index d, int heads, Index d_hidden, Rng rng)
    : self_attn(d, heads, rng.fork("self")),
      cross_attn(d, heads, rng.fork("cross")),
      ffn(d, d_hidden, rng.fork("ffn")),
      norm_self(d),
      norm_cross(d),
      norm_ffn(d) {}

Tensor DecoderLayer::forward(const Tensor& x, const Tensor& memory, const RunState& rs) const {
  Tensor h = sublayer(
      x, [&](const Tensor& in) { return self_attn.forward(in, in, in, AttentionMask::causal()); },
      norm_self, rs);
  h = sublayer(
      h,
      [&](const Tensor& in) {
        return cross_attn.forward(in, memory, memory, AttentionMask::none());
      },
      norm_cross, rs);
  return sublayer(
      h, [&](const Tensor& in) { return ffn.forward(in); }, norm_ffn, rs);
}

void DecoderLayer::collect(NamedParams& out, const std::string& prefix) const {
  self_attn.collect(out, prefix + ".self");
  cross_attn.collect(out, prefix + ".cross");
  ffn.collect(out, prefix + ".ffn");
  norm_self.collect(out, prefix + ".norm_self");
  norm_cross.collect(out, prefix + ".norm_cross");
  norm_ffn.collect(out, prefix + ".norm_ffn");
}

MtnTct::MtnTct(const ModelConfig& cfg, Rng rng)
    : cfg_(cfg),
      question_encoder_(cfg.d_model, cfg.heads, rng.fork("question_encoder")),
      caption_translator_(cfg.tct_blocks, cfg.d_model, cfg.heads, cfg.d_hidden(),
                          rng.fork("caption_translator")),
      summary_translator_(cfg.tct_blocks, cfg.d_model, cfg.heads, cfg.d_hidden(),
                          rng.fork("summary_translator")) {
  if (cfg.vocab_size <= 0) throw ConfigError("model requires a vocabulary size");
  if (cfg.decoder_layers < 1 || cfg.autoencoder_layers < 1) {
    throw ConfigError("decoder and auto-encoder need at least one layer");
  }
  embedding_ = xavier_uniform({cfg.vocab_size, cfg.d_model}, rng.fork("embedding"));
  if (cfg.visual_enabled()) {
    visual_proj_w_ = xavier_uniform({cfg.visual_dim, cfg.d_model}, rng.fork("visual_proj_w"));
    visual_proj_b_ = Tensor::zeros({cfg.d_model}, true);
  }
  if (cfg.audio_enabled()) {
    audio_proj_w_ = xavier_uniform({cfg.audio_dim, cfg.d_model}, rng.fork("audio_proj_w"));
    audio_proj_b_ = Tensor::zeros({cfg.d_model}, true);
  }
  for (int l = 0; l < cfg.autoencoder_layers; ++l) {
    if (cfg.visual_enabled()) {
      autoenc_visual_.emplace_back(cfg.d_model, cfg.heads,
                                   rng.fork("autoenc_v" + std::to_string(l)));
    }
    if (cfg.audio_enabled()) {
      autoenc_audio_.emplace_back(cfg.d_model, cfg.heads,
                                  rng.fork("autoenc_a" + std::to_string(l)));
    }
  }
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    decoder_.emplace_back(cfg.d_model, cfg.heads, cfg.d_hidden(),
                          rng.fork("decoder" + std::to_string(l)));
  }
  out_w_ = xavier_uniform({cfg.d_model, cfg.vocab_size}, rng.fork("out_w"));
  out_b_ = Tensor::zeros({cfg.vocab_size}, true);
  history_sentinel_ = xavier_uniform({1, cfg.d_model}, rng.fork("history_sentinel"));
}

Tensor MtnTct::embed_tokens(const std::vector<int>& ids, Index pe_offset) const {
  Tensor e = scale(embedding_lookup(embedding_, ids), std::sqrt(double(cfg_.d_model)));
  return add(e, positional_encoding_slice(pe_offset, e.rows(), cfg_.d_model));
}

Tensor MtnTct::vocab_logits(const Tensor& x) const {
  return add_rowwise(matmul(x, out_w_), out_b_);
}

void MtnTct::check_example(const DialogueExample& ex) const {
  require_eos_terminated("question", ex.question);
  require_eos_terminated("answer", ex.answer);
  require_eos_terminated("summary", ex.summary);
  for (const auto& turn : ex.history) require_eos_terminated("history turn", turn);
  if (cfg_.visual_enabled()) {
    require_eos_terminated("caption", ex.caption);
    if (!ex.visual.defined() || ex.visual.rows() == 0) {
      throw CorpusError("example '" + ex.id + "' lacks visual features");
    }
    if (ex.visual.cols() != cfg_.visual_dim) {
      throw ConfigError("visual feature width " + std::to_string(ex.visual.cols()) +
                        " vs configured " + std::to_string(cfg_.visual_dim));
    }
  }
  if (cfg_.audio_enabled()) {
    if (!ex.audio.defined() || ex.audio.rows() == 0) {
      throw CorpusError("example '" + ex.id + "' lacks audio features");
    }
    if (ex.audio.cols() != cfg_.audio_dim) {
      throw ConfigError("audio feature width " + std::to_string(ex.audio.cols()) +
                        " vs configured " + std::to_string(cfg_.audio_dim));
    }
  }
}

EncoderOutputs MtnTct::encode(const DialogueExample& ex, const RunState& rs) const {
  check_example(ex);
  EncoderOutputs out;
  out.question = question_encoder_.forward(embed_tokens(ex.question), AttentionMask::none(), rs);
  if (cfg_.visual_enabled()) {
    Tensor proj = add_rowwise(matmul(ex.visual, visual_proj_w_), visual_proj_b_);
    out.visual = add(proj, positional_encoding(proj.rows(), cfg_.d_model));
  }
  if (cfg_.audio_enabled()) {
    Tensor proj = add_rowwise(matmul(ex.audio, audio_proj_w_), audio_proj_b_);
    out.audio = add(proj, positional_encoding(proj.rows(), cfg_.d_model));
  }
  return out;
}

MtnTct::TranslatorResult MtnTct::video_caption_translate(const Tensor& visual_encoded,
                                                         const std::vector<int>& caption,
                                                         const RunState& rs) const {
  require_eos_terminated("caption", caption);
  Tensor target_in = embed_tokens(shift_right(caption));
  TranslatorResult res;
  res.representation = caption_translator_.forward(target_in, visual_encoded,
                                                   AttentionMask::causal(), AttentionMask::none(),
                                                   rs);
  res.logits = vocab_logits(res.representation);
  return res;
}

MtnTct::TranslatorResult MtnTct::dialogue_summary_translate(
    const std::vector<std::vector<int>>& history, const std::vector<int>& summary,
    const RunState& rs) const {
  require_eos_terminated("summary", summary);
  Tensor target_in = embed_tokens(shift_right(summary));
  TranslatorResult res;
  if (history.empty()) {
    // First turn: the learned sentinel keeps the source non-empty.
    res.representation = summary_translator_.stack.forward(
        target_in, history_sentinel_, AttentionMask::causal(), AttentionMask::none(), rs);
  } else {
    std::vector<Tensor> utterances;
    std::vector<Index> eos_index;
    Index offset = 0;
    for (const auto& turn : history) {
      require_eos_terminated("history turn", turn);
      utterances.push_back(embed_tokens(turn, offset));
      eos_index.push_back(static_cast<Index>(turn.size()) - 1);
      offset += static_cast<Index>(turn.size());
    }
    res.representation = summary_translator_
                             .forward(target_in, AttentionMask::causal(), utterances, eos_index, rs)
                             .out;
  }
  res.logits = vocab_logits(res.representation);
  return res;
}

std::pair<Tensor, Tensor> MtnTct::auto_encode(const Tensor& question_encoded,
                                              const EncoderOutputs& enc,
                                              const RunState& rs) const {
  (void)rs;
  Tensor g_v, g_a;
  if (cfg_.visual_enabled()) {
    g_v = question_encoded;
    for (const auto& layer : autoenc_visual_) {
      g_v = layer.forward(g_v, enc.visual, enc.visual, AttentionMask::none());
    }
  }
  if (cfg_.audio_enabled()) {
    g_a = question_encoded;
    for (const auto& layer : autoenc_audio_) {
      g_a = layer.forward(g_a, enc.audio, enc.audio, AttentionMask::none());
    }
  }
  return {g_v, g_a};
}

MtnTct::Upstream MtnTct::run_upstream(const DialogueExample& ex, const RunState& rs,
                                      const ForwardOptions& opt) const {
  Upstream up;
  up.enc = encode(ex, rs);
  if (cfg_.visual_enabled()) {
    TranslatorResult cap = video_caption_translate(up.enc.visual, ex.caption, rs);
    up.caption_repr = cap.representation;
    up.caption_logits = cap.logits;
  }
  TranslatorResult sum = dialogue_summary_translate(ex.history, ex.summary, rs);
  up.summary_repr = sum.representation;
  up.summary_logits = sum.logits;
  std::tie(up.g_visual, up.g_audio) = auto_encode(up.enc.question, up.enc, rs);

  // Fused memory, fixed segment order; the positional encoding over the
  // fused sequence makes the order observable.
  std::vector<Tensor> segments;
  segments.push_back(up.enc.question);
  if (up.g_visual.defined()) segments.push_back(up.g_visual);
  if (up.g_audio.defined()) segments.push_back(up.g_audio);
  if (up.caption_repr.defined()) {
    segments.push_back(opt.detach_translator_memory ? detach(up.caption_repr) : up.caption_repr);
  }
  segments.push_back(opt.detach_translator_memory ? detach(up.summary_repr) : up.summary_repr);
  Tensor fused = segments.size() == 1 ? segments[0] : concat(segments, 0);
  up.memory = add(fused, positional_encoding(fused.rows(), cfg_.d_model));
  return up;
}

Tensor MtnTct::decoder_logits(const Tensor& memory, const std::vector<int>& shifted_answer,
                              const RunState& rs) const {
  Tensor x = embed_tokens(shifted_answer);
  for (const auto& layer : decoder_) x = layer.forward(x, memory, rs);
  return vocab_logits(x);
}

Tensor MtnTct::decode_train(const DialogueExample& ex, const RunState& rs,
                            const ForwardOptions& opt) const {
  Upstream up = run_upstream(ex, rs, opt);
  return decoder_logits(up.memory, shift_right(ex.answer), rs);
}

CompositeLoss MtnTct::composite_loss(const DialogueExample& ex, double alpha, double beta,
                                     const RunState& rs, const ForwardOptions& opt) const {
  if (alpha < 0.0 || beta < 0.0) {
    throw ContractError("composite loss weights must be non-negative");
  }
  Upstream up = run_upstream(ex, rs, opt);
  CompositeLoss loss;
  loss.answer = cross_entropy(decoder_logits(up.memory, shift_right(ex.answer), rs), ex.answer,
                              kPadId);
  if (up.caption_logits.defined()) {
    loss.caption = cross_entropy(up.caption_logits, ex.caption, kPadId);
  }
  loss.summary = cross_entropy(up.summary_logits, ex.summary, kPadId);
  // Zero-weight terms stay out of the graph entirely.
  loss.total = loss.answer;
  if (alpha != 0.0 && loss.caption.defined()) {
    loss.total = add(loss.total, scale(loss.caption, alpha));
  }
  if (beta != 0.0) {
    loss.total = add(loss.total, scale(loss.summary, beta));
  }
  return loss;
}

GenerationResult MtnTct::generate(const DialogueExample& ex, const DecodeConfig& decode) const {
  RunState rs = RunState::eval();
  Upstream up = run_upstream(ex, rs, {});
  auto step = [&](const std::vector<int>& prefix) {
    std::vector<int> in;
    in.reserve(prefix.size() + 1);
    in.push_back(kSosId);
    in.insert(in.end(), prefix.begin(), prefix.end());
    Tensor logits = decoder_logits(up.memory, in, rs);
    return Vec(logits.mat().row(logits.rows() - 1).transpose());
  };
  return decode_sequence(step, kEosId, decode);
}

std::pair<double, Index> MtnTct::answer_nll(const DialogueExample& ex) const {
  Tensor logits = decode_train(ex, RunState::eval());
  ConstMatMap lm = logits.mat();
  double nll = 0.0;
  for (Index t = 0; t < lm.rows(); ++t) {
    double m = lm.row(t).maxCoeff();
    double lse = m + std::log((lm.row(t).array() - m).exp().sum());
    nll += lse - lm(t, ex.answer[static_cast<size_t>(t)]);
  }
  return {nll, lm.rows()};
}

Index MtnTct::answer_argmax_matches(const DialogueExample& ex) const {
  Tensor logits = decode_train(ex, RunState::eval());
  Index hits = 0;
  for (Index t = 0; t < logits.rows(); ++t) {
    Index arg;
    logits.mat().row(t).maxCoeff(&arg);
    if (static_cast<int>(arg) == ex.answer[static_cast<size_t>(t)]) ++hits;
  }
  return hits;
}

NamedParams MtnTct::named_parameters() const {
  NamedParams out;
  out.emplace_back("embedding", embedding_);
  question_encoder_.collect(out, "question_encoder");
  if (visual_proj_w_.defined()) {
    out.emplace_back("visual_proj.w", visual_proj_w_);
    out.emplace_back("visual_proj.b", visual_proj_b_);
  }
  if (audio_proj_w_.defined()) {
    out.emplace_back("audio_proj.w", audio_proj_w_);
    out.emplace_back("audio_proj.b", audio_proj_b_);
  }
  if (cfg_.visual_enabled()) caption_translator_.collect(out, "caption_translator");
  summary_translator_.collect(out, "summary_translator");
  for (size_t l = 0; l < autoenc_visual_.size(); ++l) {
    autoenc_visual_[l].collect(out, "autoenc_visual" + std::to_string(l));
  }
  for (size_t l = 0; l < autoenc_audio_.size(); ++l) {
    autoenc_audio_[l].collect(out, "autoenc_audio" + std::to_string(l));
  }
  for (size_t l = 0; l < decoder_.size(); ++l) {
    decoder_[l].collect(out, "decoder" + std::to_string(l));
  }
  out.emplace_back("out.w", out_w_);
  out.emplace_back("out.b", out_b_);
  out.emplace_back("history_sentinel", history_sentinel_);
  return out;
}

}  // namespace tct
