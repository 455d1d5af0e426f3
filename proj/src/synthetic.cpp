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

#include "tct/synthetic.hpp"

#include <algorithm>
#include <set>

namespace tct {
namespace {

std::string word(Index idx) { return "w" + std::to_string(idx); }

std::string words_text(const std::vector<Index>& seq) {
  std::string out;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (i) out.push_back(' ');
    out += word(seq[i]);
  }
  return out;
}

std::vector<Index> apply_mapping(const std::vector<Index>& seq,
                                 const std::vector<Index>& permutation,
                                 SyntheticSpec::Mapping mapping) {
  std::vector<Index> out;
  out.reserve(seq.size());
  for (Index t : seq) out.push_back(permutation[static_cast<size_t>(t)]);
  if (mapping != SyntheticSpec::Mapping::Permutation) {
    std::reverse(out.begin(), out.end());
  }
  return out;
}

std::vector<Index> random_sequence(Rng& rng, Index lo, Index hi, Index vocab) {
  Index len = rng.uniform_int(static_cast<int>(lo), static_cast<int>(hi));
  std::vector<Index> seq(static_cast<size_t>(len));
  for (auto& t : seq) t = rng.uniform_int(0, static_cast<int>(vocab) - 1);
  return seq;
}

}  // namespace

SyntheticSpec::Mapping parse_mapping(const std::string& name) {
  if (name == "permutation") return SyntheticSpec::Mapping::Permutation;
  if (name == "reversal") return SyntheticSpec::Mapping::Reversal;
  if (name == "permutation-reversal") return SyntheticSpec::Mapping::PermutationReversal;
  throw ConfigError("unknown synthetic mapping '" + name +
                    "' (expected permutation, reversal, or permutation-reversal)");
}

std::string mapping_name(SyntheticSpec::Mapping mapping) {
  switch (mapping) {
    case SyntheticSpec::Mapping::Permutation: return "permutation";
    case SyntheticSpec::Mapping::Reversal: return "reversal";
    case SyntheticSpec::Mapping::PermutationReversal: return "permutation-reversal";
  }
  throw ConfigError("invalid mapping value");
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.vocab_words < 2) throw ConfigError("synthetic vocabulary needs at least two words");
  if (spec.min_len < 1 || spec.max_len < spec.min_len) {
    throw ConfigError("synthetic length range [" + std::to_string(spec.min_len) + "," +
                      std::to_string(spec.max_len) + "] is invalid");
  }
  SyntheticCorpus corpus;
  corpus.spec = spec;
  Rng root = Rng(spec.seed).fork("synthetic");

  corpus.permutation.resize(static_cast<size_t>(spec.vocab_words));
  for (Index i = 0; i < spec.vocab_words; ++i) corpus.permutation[static_cast<size_t>(i)] = i;
  if (spec.mapping != SyntheticSpec::Mapping::Reversal) {
    Rng shuffle = root.fork("permutation");
    for (Index i = spec.vocab_words - 1; i > 0; --i) {
      Index j = shuffle.uniform_int(0, static_cast<int>(i));
      std::swap(corpus.permutation[static_cast<size_t>(i)],
                corpus.permutation[static_cast<size_t>(j)]);
    }
  }

  std::set<std::vector<Index>> used_questions;
  Rng gen = root.fork("examples");
  auto make_split = [&](const char* name, Index count) {
    std::vector<DialogueRecord> split;
    split.reserve(static_cast<size_t>(count));
    for (Index i = 0; i < count; ++i) {
      DialogueRecord rec;
      rec.id = std::string(name) + "-" + std::to_string(i);

      std::vector<Index> question;
      do {
        question = random_sequence(gen, spec.min_len, spec.max_len, spec.vocab_words);
      } while (!used_questions.insert(question).second);
      rec.question = words_text(question);
      rec.answer = words_text(apply_mapping(question, corpus.permutation, spec.mapping));

      std::vector<Index> visual_src = random_sequence(gen, spec.min_len, spec.max_len,
                                                      spec.vocab_words);
      rec.caption = words_text(apply_mapping(visual_src, corpus.permutation, spec.mapping));
      rec.visual.resize(static_cast<Index>(visual_src.size()), spec.vocab_words);
      for (Index r = 0; r < rec.visual.rows(); ++r) {
        for (Index c = 0; c < rec.visual.cols(); ++c) {
          double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * gen.gaussian() : 0.0;
          rec.visual(r, c) = (c == visual_src[static_cast<size_t>(r)] ? 1.0 : 0.0) + noise;
        }
      }

      int turns = gen.uniform_int(1, spec.max_history_turns);
      std::vector<Index> last_turn;
      for (int t = 0; t < turns; ++t) {
        last_turn = random_sequence(gen, 2, 6, spec.vocab_words);
        rec.history.push_back(words_text(last_turn));
      }
      rec.summary = words_text(apply_mapping(last_turn, corpus.permutation, spec.mapping));

      if (spec.audio_dim > 0) {
        Index rows = gen.uniform_int(2, 5);
        rec.audio.resize(rows, spec.audio_dim);
        for (Index r = 0; r < rows; ++r) {
          for (Index c = 0; c < spec.audio_dim; ++c) rec.audio(r, c) = gen.gaussian();
        }
      }
      split.push_back(std::move(rec));
    }
    return split;
  };

  corpus.train = make_split("train", spec.train_size);
  corpus.valid = make_split("valid", spec.valid_size);
  corpus.test = make_split("test", spec.test_size);
  return corpus;
}

}  // namespace tct
