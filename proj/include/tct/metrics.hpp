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

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tct/tensor.hpp"

namespace tct {

using TokenSeq = std::vector<std::string>;

// Metric-side tokenization (lowercase, punctuation split off) so scores
// are stable across callers.
TokenSeq metric_tokens(const std::string& text);

// Clipped modified n-gram precision with a geometric mean over orders
// 1..max_n and the closest-reference-length brevity penalty. Empty
// hypotheses score zero everywhere.
std::vector<double> bleu(const TokenSeq& hypothesis, const std::vector<TokenSeq>& references,
                         int max_n = 4);

// LCS F-measure with beta = 1.2; multi-reference takes the max.
double rouge_l(const TokenSeq& hypothesis, const std::vector<TokenSeq>& references);

// Exact-match METEOR: greedy left-to-right unigram alignment minimizing
// chunks, harmonic mean weighted 9:1 toward recall, chunk penalty
// 0.5 * (chunks/matches)^3. Not comparable to lexical-resource METEOR.
double meteor_simplified(const TokenSeq& hypothesis, const std::vector<TokenSeq>& references);

// Corpus-level CIDEr: per order 1..4, TF-IDF cosine against each
// reference, Gaussian length penalty (sigma = 6), scaled by 10. IDF comes
// from the reference corpus, so it is a corpus-level call by contract.
std::vector<double> cider(const std::vector<TokenSeq>& hypotheses,
                          const std::vector<std::vector<TokenSeq>>& reference_sets,
                          double sigma = 6.0);

enum class QuestionType { What, Who, Where, Which, How, When, Why, Others };
inline constexpr int kQuestionTypeCount = 8;
const char* question_type_name(QuestionType t);
// First matching interrogative keyword anywhere in the question, checked
// in priority order What, Who, Where, Which, How, When, Why.
QuestionType classify_question(const std::string& question);

struct ExampleScores {
  std::string id;
  std::array<double, 4> bleu{};
  double rouge_l = 0.0;
  double meteor = 0.0;
  double cider = 0.0;
  QuestionType question_type = QuestionType::Others;
};

struct MetricReport {
  std::array<double, 4> corpus_bleu{};  // pooled n-gram statistics
  double rouge_l = 0.0;                 // per-example means
  double meteor = 0.0;
  double cider = 0.0;
  std::array<std::optional<double>, kQuestionTypeCount> meteor_by_type;
  std::array<Index, kQuestionTypeCount> examples_by_type{};
  std::vector<ExampleScores> examples;

  // Score-range invariants; throws ContractError when violated.
  void validate() const;
};

struct EvalItem {
  std::string id;
  std::string question;
  TokenSeq hypothesis;
  std::vector<TokenSeq> references;  // at least one
};

MetricReport evaluate_corpus(const std::vector<EvalItem>& items);

// File-level evaluation: hypotheses and references are corpus files
// aligned by example id. Each reference file contributes its answer (plus
// any extra answers); refs_limit > 0 keeps only the first N references.
MetricReport evaluate_files(const std::string& hyp_path,
                            const std::vector<std::string>& ref_paths, int refs_limit = 0);

// One metric per line, then the question-type table.
void write_report(std::ostream& os, const MetricReport& report);

}  // namespace tct
