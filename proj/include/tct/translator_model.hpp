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

namespace tct {

// Self-contained sequence translator: embedding (or dense projection),
// translator stack, output head. Targets are teacher-forced with a
// right-shifted sos-prefixed input.
struct TranslatorModelConfig {
  Index d_model = 32;
  int heads = 4;
  int blocks = 1;
  Index vocab_size = 0;          // textual sides share one vocabulary
  Index source_feature_dim = 0;  // > 0 switches the source to dense rows
  Index target_feature_dim = 0;  // > 0 switches the target to dense rows
  // Diagnostic ablation: blanks the encoded source so the target decoder
  // trains without any cross-modal signal.
  bool zero_source = false;

  Index d_hidden() const { return 4 * d_model; }
};

class TranslatorModel {
 public:
  TranslatorModel(const TranslatorModelConfig& cfg, Rng rng);

  // Vocabulary logits [T, vocab] for textual targets, feature rows
  // [T, target_feature_dim] for dense targets.
  Tensor forward(const ModalitySequence& source, const ModalitySequence& target,
                 const RunState& rs) const;
  Tensor loss(const ModalitySequence& source, const ModalitySequence& target,
              TranslationLossKind kind, const RunState& rs) const;
  GenerationResult generate(const ModalitySequence& source, const DecodeConfig& decode) const;

  // Evaluation helpers for textual targets (no tape, dropout off):
  // summed token NLL with the token count, and teacher-forced argmax hits.
  std::pair<double, Index> target_nll(const ModalitySequence& source,
                                      const ModalitySequence& target) const;
  Index target_argmax_matches(const ModalitySequence& source,
                              const ModalitySequence& target) const;

  NamedParams named_parameters() const;
  const TranslatorModelConfig& config() const { return cfg_; }

 private:
  Tensor encode_source(const ModalitySequence& source, const RunState& rs) const;
  Tensor embed_tokens(const std::vector<int>& ids) const;

  TranslatorModelConfig cfg_;
  Tensor embedding_;                        // [vocab, d]
  Tensor source_proj_w_, source_proj_b_;    // dense source -> d
  Tensor target_proj_w_, target_proj_b_;    // dense target -> d
  TranslatorStack stack_;
  Tensor out_w_, out_b_;                    // d -> vocab or d -> feature dim
};

}  // namespace tct
