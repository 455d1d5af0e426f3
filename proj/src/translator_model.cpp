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

#include "tct/translator_model.hpp"

#include <cmath>

#include "tct/vocab.hpp"

namespace tct {
namespace {

// sos-prefixed right shift: position t sees gold tokens < t.
std::vector<int> shift_right(const std::vector<int>& tokens) {
  std::vector<int> in;
  in.reserve(tokens.size());
  in.push_back(kSosId);
  in.insert(in.end(), tokens.begin(), tokens.size() > 1 ? tokens.end() - 1 : tokens.begin());
  return in;
}

}  // namespace

TranslatorModel::TranslatorModel(const TranslatorModelConfig& cfg, Rng rng)
    : cfg_(cfg), stack_(cfg.blocks, cfg.d_model, cfg.heads, cfg.d_hidden(), rng.fork("stack")) {
  bool textual_side = cfg.source_feature_dim == 0 || cfg.target_feature_dim == 0;
  if (textual_side && cfg.vocab_size <= 0) {
    throw ConfigError("translator model with a textual side needs a vocabulary size");
  }
  if (cfg.vocab_size > 0) {
    embedding_ = xavier_uniform({cfg.vocab_size, cfg.d_model}, rng.fork("embedding"));
  }
  if (cfg.source_feature_dim > 0) {
    source_proj_w_ = xavier_uniform({cfg.source_feature_dim, cfg.d_model}, rng.fork("source_proj_w"));
    source_proj_b_ = Tensor::zeros({cfg.d_model}, true);
  }
  if (cfg.target_feature_dim > 0) {
    target_proj_w_ = xavier_uniform({cfg.target_feature_dim, cfg.d_model}, rng.fork("target_proj_w"));
    target_proj_b_ = Tensor::zeros({cfg.d_model}, true);
    out_w_ = xavier_uniform({cfg.d_model, cfg.target_feature_dim}, rng.fork("out_w"));
    out_b_ = Tensor::zeros({cfg.target_feature_dim}, true);
  } else {
    out_w_ = xavier_uniform({cfg.d_model, cfg.vocab_size}, rng.fork("out_w"));
    out_b_ = Tensor::zeros({cfg.vocab_size}, true);
  }
}

Tensor TranslatorModel::embed_tokens(const std::vector<int>& ids) const {
  Tensor e = scale(embedding_lookup(embedding_, ids), std::sqrt(double(cfg_.d_model)));
  return add(e, positional_encoding(static_cast<Index>(ids.size()), cfg_.d_model));
}

Tensor TranslatorModel::encode_source(const ModalitySequence& source, const RunState& rs) const {
  (void)rs;
  Tensor enc;
  if (source.kind == ModalitySequence::Kind::Textual) {
    if (cfg_.source_feature_dim > 0) {
      throw ContractError("translator model configured for a dense source got tokens");
    }
    enc = embed_tokens(source.tokens);
  } else {
    if (cfg_.source_feature_dim == 0) {
      throw ContractError("translator model configured for a textual source got features");
    }
    Tensor proj = add_rowwise(matmul(source.features, source_proj_w_), source_proj_b_);
    enc = add(proj, positional_encoding(proj.rows(), cfg_.d_model));
  }
  if (cfg_.zero_source) enc = scale(enc, 0.0);
  return enc;
}

Tensor TranslatorModel::forward(const ModalitySequence& source, const ModalitySequence& target,
                                const RunState& rs) const {
  Tensor source_enc = encode_source(source, rs);
  AttentionMask source_mask = AttentionMask::none();

  Tensor target_in;
  if (target.kind == ModalitySequence::Kind::Textual) {
    if (target.tokens.empty()) throw ContractError("translator target is empty");
    target_in = embed_tokens(shift_right(target.tokens));
  } else {
    // Dense teacher forcing: a zero row stands in for sos.
    MatRM shifted = MatRM::Zero(target.features.rows(), target.features.cols());
    if (target.features.rows() > 1) {
      shifted.bottomRows(target.features.rows() - 1) =
          target.features.mat().topRows(target.features.rows() - 1);
    }
    Tensor proj = add_rowwise(matmul(Tensor::from_matrix(shifted), target_proj_w_), target_proj_b_);
    target_in = add(proj, positional_encoding(proj.rows(), cfg_.d_model));
  }

  Tensor out = stack_.forward(target_in, source_enc, AttentionMask::causal(), source_mask, rs);
  return add_rowwise(matmul(out, out_w_), out_b_);
}

Tensor TranslatorModel::loss(const ModalitySequence& source, const ModalitySequence& target,
                             TranslationLossKind kind, const RunState& rs) const {
  if (target.kind == ModalitySequence::Kind::Textual &&
      (target.tokens.empty() || target.tokens.back() != kEosId)) {
    throw CorpusError("textual translation target is not eos-terminated");
  }
  return translation_loss(kind, forward(source, target, rs), target, kPadId);
}

GenerationResult TranslatorModel::generate(const ModalitySequence& source,
                                           const DecodeConfig& decode) const {
  if (cfg_.target_feature_dim > 0) {
    throw ContractError("generate applies to textual targets only");
  }
  RunState rs = RunState::eval();
  Tensor source_enc = encode_source(source, rs);
  auto step = [&](const std::vector<int>& prefix) {
    std::vector<int> in;
    in.reserve(prefix.size() + 1);
    in.push_back(kSosId);
    in.insert(in.end(), prefix.begin(), prefix.end());
    Tensor target_in = embed_tokens(in);
    Tensor out =
        stack_.forward(target_in, source_enc, AttentionMask::causal(), AttentionMask::none(), rs);
    Tensor logits = add_rowwise(matmul(out, out_w_), out_b_);
    return Vec(logits.mat().row(logits.rows() - 1).transpose());
  };
  return decode_sequence(step, kEosId, decode);
}

std::pair<double, Index> TranslatorModel::target_nll(const ModalitySequence& source,
                                                     const ModalitySequence& target) const {
  if (target.kind != ModalitySequence::Kind::Textual) {
    throw ContractError("target_nll applies to textual targets only");
  }
  Tensor logits = forward(source, target, RunState::eval());
  ConstMatMap lm = logits.mat();
  double nll = 0.0;
  for (Index t = 0; t < lm.rows(); ++t) {
    double m = lm.row(t).maxCoeff();
    double lse = m + std::log((lm.row(t).array() - m).exp().sum());
    nll += lse - lm(t, target.tokens[static_cast<size_t>(t)]);
  }
  return {nll, lm.rows()};
}

Index TranslatorModel::target_argmax_matches(const ModalitySequence& source,
                                             const ModalitySequence& target) const {
  Tensor logits = forward(source, target, RunState::eval());
  Index hits = 0;
  for (Index t = 0; t < logits.rows(); ++t) {
    Index arg;
    logits.mat().row(t).maxCoeff(&arg);
    if (static_cast<int>(arg) == target.tokens[static_cast<size_t>(t)]) ++hits;
  }
  return hits;
}

NamedParams TranslatorModel::named_parameters() const {
  NamedParams out;
  if (embedding_.defined()) out.emplace_back("embedding", embedding_);
  if (source_proj_w_.defined()) {
    out.emplace_back("source_proj.w", source_proj_w_);
    out.emplace_back("source_proj.b", source_proj_b_);
  }
  if (target_proj_w_.defined()) {
    out.emplace_back("target_proj.w", target_proj_w_);
    out.emplace_back("target_proj.b", target_proj_b_);
  }
  stack_.collect(out, "stack");
  out.emplace_back("out.w", out_w_);
  out.emplace_back("out.b", out_b_);
  return out;
}

}  // namespace tct
