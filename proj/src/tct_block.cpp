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

#include "tct/tct_block.hpp"

namespace tct {

TctBlock::TctBlock(Index d, int heads, Index d_hidden, Rng rng)
    : target_self_attn(d, heads, rng.fork("target_self")),
      source_self_attn(d, heads, rng.fork("source_self")),
      translator_attn(d, heads, rng.fork("translator")),
      ffn_target(d, d_hidden, rng.fork("ffn_target")),
      ffn_out(d, d_hidden, rng.fork("ffn_out")),
      norm_target(d),
      norm_source(d),
      norm_translate(d),
      norm_ffn_target(d),
      norm_ffn_out(d) {}

TctBlock::Outputs TctBlock::forward(const Tensor& target, const Tensor& source,
                                    const AttentionMask& target_mask,
                                    const AttentionMask& source_mask,
                                    const RunState& rs) const {
  if (target.cols() != source.cols()) {
    throw ConfigError("tct block: target width " + std::to_string(target.cols()) +
                      " differs from source width " + std::to_string(source.cols()));
  }
  Outputs o;
  o.target_ctx = sublayer(
      target, [&](const Tensor& x) { return target_self_attn.forward(x, x, x, target_mask); },
      norm_target, rs);
  o.source_ctx = sublayer(
      source, [&](const Tensor& x) { return source_self_attn.forward(x, x, x, source_mask); },
      norm_source, rs);
  AttentionMask cross = source_mask.padding_only();
  o.translated = sublayer(
      o.target_ctx,
      [&](const Tensor& x) { return translator_attn.forward(x, o.source_ctx, o.source_ctx, cross); },
      norm_translate, rs);
  Tensor mid = sublayer(
      o.translated, [&](const Tensor& x) { return ffn_target.forward(x); }, norm_ffn_target, rs);
  o.out = sublayer(
      mid, [&](const Tensor& x) { return ffn_out.forward(x); }, norm_ffn_out, rs);
  return o;
}

void TctBlock::collect(NamedParams& out, const std::string& prefix) const {
  target_self_attn.collect(out, prefix + ".target_self");
  source_self_attn.collect(out, prefix + ".source_self");
  translator_attn.collect(out, prefix + ".translator");
  ffn_target.collect(out, prefix + ".ffn_target");
  ffn_out.collect(out, prefix + ".ffn_out");
  norm_target.collect(out, prefix + ".norm_target");
  norm_source.collect(out, prefix + ".norm_source");
  norm_translate.collect(out, prefix + ".norm_translate");
  norm_ffn_target.collect(out, prefix + ".norm_ffn_target");
  norm_ffn_out.collect(out, prefix + ".norm_ffn_out");
}

TranslatorStack::TranslatorStack(int m, Index d, int heads, Index d_hidden, Rng rng) {
  if (m < 1) throw ConfigError("translator stack needs at least one block, got " + std::to_string(m));
  blocks.reserve(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    blocks.emplace_back(d, heads, d_hidden, rng.fork("block" + std::to_string(i)));
  }
}

Tensor TranslatorStack::forward(const Tensor& target, const Tensor& source,
                                const AttentionMask& target_mask,
                                const AttentionMask& source_mask, const RunState& rs) const {
  if (blocks.empty()) throw ConfigError("translator stack is empty");
  Tensor x = target;
  for (const TctBlock& block : blocks) {
    x = block.forward(x, source, target_mask, source_mask, rs).out;
  }
  return x;
}

void TranslatorStack::collect(NamedParams& out, const std::string& prefix) const {
  for (size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].collect(out, prefix + ".block" + std::to_string(i));
  }
}

SelfAttentionEncoder::SelfAttentionEncoder(Index d, int heads, Rng rng)
    : attn(d, heads, rng.fork("attn")), norm(d) {}

Tensor SelfAttentionEncoder::forward(const Tensor& x, const AttentionMask& mask,
                                     const RunState& rs) const {
  return sublayer(
      x, [&](const Tensor& in) { return attn.forward(in, in, in, mask); }, norm, rs);
}

void SelfAttentionEncoder::collect(NamedParams& out, const std::string& prefix) const {
  attn.collect(out, prefix + ".attn");
  norm.collect(out, prefix + ".norm");
}

HierarchicalTct::HierarchicalTct(int m, Index d, int heads, Index d_hidden, Rng rng)
    : word_encoder(d, heads, rng.fork("word_encoder")),
      stack(m, d, heads, d_hidden, rng.fork("stack")) {}

HierarchicalTct::Outputs HierarchicalTct::forward(const Tensor& target,
                                                  const AttentionMask& target_mask,
                                                  const std::vector<Tensor>& utterances,
                                                  const std::vector<Index>& eos_index,
                                                  const RunState& rs) const {
  if (utterances.empty()) {
    throw ContractError("hierarchical translator: empty utterance list");
  }
  if (utterances.size() != eos_index.size()) {
    throw ContractError("hierarchical translator: " + std::to_string(utterances.size()) +
                        " utterances but " + std::to_string(eos_index.size()) + " eos positions");
  }
  std::vector<Tensor> sentence_rows;
  sentence_rows.reserve(utterances.size());
  for (size_t u = 0; u < utterances.size(); ++u) {
    if (eos_index[u] < 0 || eos_index[u] >= utterances[u].rows()) {
      throw ContractError("hierarchical translator: eos position " + std::to_string(eos_index[u]) +
                          " outside utterance of length " + std::to_string(utterances[u].rows()));
    }
    Tensor words = word_encoder.forward(utterances[u], AttentionMask::none(), rs);
    sentence_rows.push_back(gather_rows(words, {eos_index[u]}));
  }
  Outputs o;
  o.sentence_seq = sentence_rows.size() == 1 ? sentence_rows[0] : concat(sentence_rows, 0);
  o.out = stack.forward(target, o.sentence_seq, target_mask, AttentionMask::none(), rs);
  return o;
}

void HierarchicalTct::collect(NamedParams& out, const std::string& prefix) const {
  word_encoder.collect(out, prefix + ".word_encoder");
  stack.collect(out, prefix + ".stack");
}

ModalitySequence ModalitySequence::textual(std::vector<int> tokens) {
  ModalitySequence s;
  s.kind = Kind::Textual;
  s.tokens = std::move(tokens);
  return s;
}

ModalitySequence ModalitySequence::dense(Tensor features) {
  ModalitySequence s;
  s.kind = Kind::Dense;
  s.features = std::move(features);
  return s;
}

Index ModalitySequence::length() const {
  return kind == Kind::Textual ? static_cast<Index>(tokens.size()) : features.rows();
}

std::vector<uint8_t> ModalitySequence::keep_or_all() const {
  if (!keep.empty()) return keep;
  return std::vector<uint8_t>(static_cast<size_t>(length()), 1);
}

Tensor translation_loss(TranslationLossKind kind, const Tensor& predicted,
                        const ModalitySequence& target, int pad_id) {
  if (kind == TranslationLossKind::Textual) {
    if (target.kind != ModalitySequence::Kind::Textual) {
      throw ContractError("translation_loss: textual loss over a dense target");
    }
    return cross_entropy(predicted, target.tokens, pad_id);
  }
  if (target.kind != ModalitySequence::Kind::Dense) {
    throw ContractError("translation_loss: dense loss over a textual target");
  }
  std::vector<uint8_t> keep = target.keep_or_all();
  if (kind == TranslationLossKind::DenseL1) {
    return l1_loss(predicted, target.features, keep);
  }
  return cosine_similarity_loss(predicted, target.features, keep);
}

}  // namespace tct
