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

#include "tct/corpus.hpp"
#include "tct/rng.hpp"

namespace tct {

// Deterministic cross-modal translation task with a closed-form target
// for every field: answers are the mapped question, captions the mapped
// visual source (one-hot rows plus noise), summaries the mapped last
// history turn. Splits are disjoint on question sequences by
// construction.
struct SyntheticSpec {
  enum class Mapping { Permutation, Reversal, PermutationReversal };

  Index vocab_words = 50;  // content words w0..w{n-1}
  Index min_len = 4;
  Index max_len = 10;
  Mapping mapping = Mapping::PermutationReversal;
  double noise_sigma = 0.1;  // dense one-hot perturbation
  Index train_size = 5000;
  Index valid_size = 500;
  Index test_size = 500;
  int max_history_turns = 3;
  Index audio_dim = 8;  // pure-noise audio rows exercise the audio path
  uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<DialogueRecord> train, valid, test;
  // Content-word permutation table (identity for pure reversal); exposed
  // so tests can re-apply the mapping outside the generator.
  std::vector<Index> permutation;
  SyntheticSpec spec;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

SyntheticSpec::Mapping parse_mapping(const std::string& name);
std::string mapping_name(SyntheticSpec::Mapping mapping);

}  // namespace tct
