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

#include "tct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "tct/corpus.hpp"
#include "tct/vocab.hpp"

namespace tct {

TokenSeq metric_tokens(const std::string& text) { return tokenize_text(text); }

namespace {

// n-grams as separator-joined strings; '\x1f' cannot appear in tokens.
using Counts = std::unordered_map<std::string, double>;

Counts ngram_counts(const TokenSeq& tokens, int n) {
  Counts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (size_t j = 1; j < static_cast<size_t>(n); ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    counts[key] += 1.0;
  }
  return counts;
}

struct BleuStats {
  std::array<double, 4> clipped{};
  std::array<double, 4> total{};
  double hyp_len = 0.0;
  double ref_len = 0.0;  // closest reference length
};

BleuStats bleu_stats(const TokenSeq& hyp, const std::vector<TokenSeq>& refs, int max_n) {
  BleuStats s;
  s.hyp_len = static_cast<double>(hyp.size());
  double best_diff = std::numeric_limits<double>::infinity();
  for (const TokenSeq& r : refs) {
    double len = static_cast<double>(r.size());
    double diff = std::abs(len - s.hyp_len);
    if (diff < best_diff || (diff == best_diff && len < s.ref_len)) {
      best_diff = diff;
      s.ref_len = len;
    }
  }
  for (int n = 1; n <= max_n; ++n) {
    Counts hc = ngram_counts(hyp, n);
    Counts max_ref;
    for (const TokenSeq& r : refs) {
      for (const auto& [g, c] : ngram_counts(r, n)) {
        double& slot = max_ref[g];
        slot = std::max(slot, c);
      }
    }
    double clipped = 0.0, total = 0.0;
    for (const auto& [g, c] : hc) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    s.clipped[static_cast<size_t>(n - 1)] = clipped;
    s.total[static_cast<size_t>(n - 1)] = total;
  }
  return s;
}

std::vector<double> bleu_from_stats(const BleuStats& s, int max_n) {
  std::vector<double> out(static_cast<size_t>(max_n), 0.0);
  if (s.hyp_len == 0.0) return out;
  double bp = s.hyp_len >= s.ref_len ? 1.0 : std::exp(1.0 - s.ref_len / s.hyp_len);
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    double total = s.total[static_cast<size_t>(n - 1)];
    double clipped = s.clipped[static_cast<size_t>(n - 1)];
    if (total == 0.0 || clipped == 0.0) zero = true;
    if (!zero) log_sum += std::log(clipped / total);
    out[static_cast<size_t>(n - 1)] =
        zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(n));
  }
  return out;
}

Index lcs_length(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return 0;
  // Rolling rows, reused across calls; the exhaustive ROUGE oracle makes
  // tens of millions of these.
  thread_local std::vector<Index> prev, cur;
  prev.assign(b.size() + 1, 0);
  cur.assign(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

constexpr double kRougeBeta = 1.2;

double rouge_f(Index lcs, size_t hyp_len, size_t ref_len) {
  if (lcs == 0 || hyp_len == 0 || ref_len == 0) return 0.0;
  double p = static_cast<double>(lcs) / static_cast<double>(hyp_len);
  double r = static_cast<double>(lcs) / static_cast<double>(ref_len);
  double b2 = kRougeBeta * kRougeBeta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

double meteor_one(const TokenSeq& hyp, const TokenSeq& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  std::vector<bool> used(ref.size(), false);
  Index matches = 0;
  Index chunks = 0;
  Index prev_ref = -2;
  for (size_t i = 0; i < hyp.size(); ++i) {
    // Prefer the reference position that extends the current chunk,
    // otherwise the earliest unused occurrence.
    Index pick = -1;
    if (prev_ref + 1 >= 0 && static_cast<size_t>(prev_ref + 1) < ref.size() &&
        !used[static_cast<size_t>(prev_ref + 1)] &&
        ref[static_cast<size_t>(prev_ref + 1)] == hyp[i]) {
      pick = prev_ref + 1;
    } else {
      for (size_t j = 0; j < ref.size(); ++j) {
        if (!used[j] && ref[j] == hyp[i]) {
          pick = static_cast<Index>(j);
          break;
        }
      }
    }
    if (pick < 0) continue;
    used[static_cast<size_t>(pick)] = true;
    ++matches;
    if (pick != prev_ref + 1) ++chunks;
    prev_ref = pick;
  }
  if (matches == 0) return 0.0;
  double m = static_cast<double>(matches);
  double p = m / static_cast<double>(hyp.size());
  double r = m / static_cast<double>(ref.size());
  double f = 10.0 * p * r / (r + 9.0 * p);
  double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return f * (1.0 - penalty);
}

}  // namespace

std::vector<double> bleu(const TokenSeq& hypothesis, const std::vector<TokenSeq>& references,
                         int max_n) {
  if (references.empty()) throw ContractError("bleu needs at least one reference");
  if (max_n < 1 || max_n > 4) throw ContractError("bleu supports orders 1..4");
  return bleu_from_stats(bleu_stats(hypothesis, references, max_n), max_n);
}

double rouge_l(const TokenSeq& hypothesis, const std::vector<TokenSeq>& references) {
  if (references.empty()) throw ContractError("rouge_l needs at least one reference");
  double best = 0.0;
  for (const TokenSeq& r : references) {
    best = std::max(best, rouge_f(lcs_length(hypothesis, r), hypothesis.size(), r.size()));
  }
  return best;
}

double meteor_simplified(const TokenSeq& hypothesis, const std::vector<TokenSeq>& references) {
  if (references.empty()) throw ContractError("meteor needs at least one reference");
  double best = 0.0;
  for (const TokenSeq& r : references) best = std::max(best, meteor_one(hypothesis, r));
  return best;
}

std::vector<double> cider(const std::vector<TokenSeq>& hypotheses,
                          const std::vector<std::vector<TokenSeq>>& reference_sets,
                          double sigma) {
  if (hypotheses.size() != reference_sets.size()) {
    throw ContractError("cider: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                        std::to_string(reference_sets.size()) + " reference sets");
  }
  if (hypotheses.empty()) throw ContractError("cider is a corpus-level call; got no examples");
  double corpus_size = static_cast<double>(reference_sets.size());

  // Document frequency per order: sets containing the n-gram.
  std::array<Counts, 4> doc_freq;
  for (const auto& refs : reference_sets) {
    for (int n = 1; n <= 4; ++n) {
      std::set<std::string> seen;
      for (const TokenSeq& r : refs) {
        for (const auto& [g, c] : ngram_counts(r, n)) seen.insert(g);
      }
      for (const auto& g : seen) doc_freq[static_cast<size_t>(n - 1)][g] += 1.0;
    }
  }
  auto idf = [&](int n, const std::string& g) {
    const Counts& df = doc_freq[static_cast<size_t>(n - 1)];
    auto it = df.find(g);
    double d = it == df.end() ? 1.0 : std::max(1.0, it->second);
    return std::log(corpus_size / d);
  };
  auto weighted = [&](const Counts& tf, int n) {
    Counts vec;
    for (const auto& [g, c] : tf) vec[g] = c * idf(n, g);
    return vec;
  };
  auto norm = [](const Counts& v) {
    double s = 0.0;
    for (const auto& [g, c] : v) s += c * c;
    return std::sqrt(s);
  };
  auto dot = [](const Counts& a, const Counts& b) {
    double s = 0.0;
    for (const auto& [g, c] : a) {
      auto it = b.find(g);
      if (it != b.end()) s += c * it->second;
    }
    return s;
  };
  auto cosine = [&](const Counts& a, const Counts& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
  };

  std::vector<double> scores;
  scores.reserve(hypotheses.size());
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const TokenSeq& hyp = hypotheses[i];
    const auto& refs = reference_sets[i];
    if (refs.empty()) throw ContractError("cider: example without references");
    double sum_orders = 0.0;
    for (int n = 1; n <= 4; ++n) {
      Counts hyp_tf = ngram_counts(hyp, n);
      Counts hyp_vec = weighted(hyp_tf, n);
      double order_score = 0.0;
      for (const TokenSeq& r : refs) {
        Counts ref_tf = ngram_counts(r, n);
        Counts ref_vec = weighted(ref_tf, n);
        double sim;
        if (norm(hyp_vec) == 0.0 && norm(ref_vec) == 0.0) {
          // Degenerate IDF (single-example corpus or all-common
          // n-grams): fall back to plain term-frequency cosine.
          sim = cosine(hyp_tf, ref_tf);
        } else {
          sim = cosine(hyp_vec, ref_vec);
        }
        double gap = static_cast<double>(hyp.size()) - static_cast<double>(r.size());
        order_score += sim * std::exp(-gap * gap / (2.0 * sigma * sigma));
      }
      sum_orders += order_score / static_cast<double>(refs.size());
    }
    scores.push_back(10.0 * sum_orders / 4.0);
  }
  return scores;
}

const char* question_type_name(QuestionType t) {
  switch (t) {
    case QuestionType::What: return "What";
    case QuestionType::Who: return "Who";
    case QuestionType::Where: return "Where";
    case QuestionType::Which: return "Which";
    case QuestionType::How: return "How";
    case QuestionType::When: return "When";
    case QuestionType::Why: return "Why";
    case QuestionType::Others: return "Others";
  }
  return "Others";
}

QuestionType classify_question(const std::string& question) {
  TokenSeq tokens = metric_tokens(question);
  auto has = [&](const char* kw) {
    return std::find(tokens.begin(), tokens.end(), kw) != tokens.end();
  };
  if (has("what")) return QuestionType::What;
  if (has("who")) return QuestionType::Who;
  if (has("where")) return QuestionType::Where;
  if (has("which")) return QuestionType::Which;
  if (has("how")) return QuestionType::How;
  if (has("when")) return QuestionType::When;
  if (has("why")) return QuestionType::Why;
  return QuestionType::Others;
}

void MetricReport::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0 + 1e-9; };
  for (double b : corpus_bleu) {
    if (!in_unit(b)) throw ContractError("corpus BLEU outside [0,1]");
  }
  if (!in_unit(rouge_l) || !in_unit(meteor)) {
    throw ContractError("corpus ROUGE/METEOR outside [0,1]");
  }
  if (cider < 0.0 || cider > 10.0 + 1e-9) throw ContractError("corpus CIDEr outside [0,10]");
  for (const ExampleScores& e : examples) {
    for (double b : e.bleu) {
      if (!in_unit(b)) throw ContractError("example BLEU outside [0,1]");
    }
    if (!in_unit(e.rouge_l) || !in_unit(e.meteor)) {
      throw ContractError("example ROUGE/METEOR outside [0,1]");
    }
    if (e.cider < 0.0 || e.cider > 10.0 + 1e-9) {
      throw ContractError("example CIDEr outside [0,10]");
    }
  }
}

MetricReport evaluate_corpus(const std::vector<EvalItem>& items) {
  if (items.empty()) throw ContractError("evaluate_corpus: no examples");
  MetricReport report;
  BleuStats pooled;
  std::vector<TokenSeq> hyps;
  std::vector<std::vector<TokenSeq>> ref_sets;
  for (const EvalItem& item : items) {
    if (item.references.empty()) {
      throw ContractError("example '" + item.id + "' has no references");
    }
    hyps.push_back(item.hypothesis);
    ref_sets.push_back(item.references);
  }
  std::vector<double> cider_scores = cider(hyps, ref_sets);

  std::array<double, kQuestionTypeCount> meteor_sum{};
  for (size_t i = 0; i < items.size(); ++i) {
    const EvalItem& item = items[i];
    ExampleScores ex;
    ex.id = item.id;
    std::vector<double> b = bleu(item.hypothesis, item.references);
    std::copy(b.begin(), b.end(), ex.bleu.begin());
    ex.rouge_l = rouge_l(item.hypothesis, item.references);
    ex.meteor = meteor_simplified(item.hypothesis, item.references);
    ex.cider = cider_scores[i];
    ex.question_type = classify_question(item.question);

    BleuStats s = bleu_stats(item.hypothesis, item.references, 4);
    for (size_t n = 0; n < 4; ++n) {
      pooled.clipped[n] += s.clipped[n];
      pooled.total[n] += s.total[n];
    }
    pooled.hyp_len += s.hyp_len;
    pooled.ref_len += s.ref_len;

    size_t type = static_cast<size_t>(ex.question_type);
    meteor_sum[type] += ex.meteor;
    report.examples_by_type[type] += 1;
    report.rouge_l += ex.rouge_l;
    report.meteor += ex.meteor;
    report.cider += ex.cider;
    report.examples.push_back(std::move(ex));
  }
  double n = static_cast<double>(items.size());
  report.rouge_l /= n;
  report.meteor /= n;
  report.cider /= n;
  std::vector<double> cb = bleu_from_stats(pooled, 4);
  std::copy(cb.begin(), cb.end(), report.corpus_bleu.begin());
  for (int t = 0; t < kQuestionTypeCount; ++t) {
    if (report.examples_by_type[static_cast<size_t>(t)] > 0) {
      report.meteor_by_type[static_cast<size_t>(t)] =
          meteor_sum[static_cast<size_t>(t)] /
          static_cast<double>(report.examples_by_type[static_cast<size_t>(t)]);
    }
  }
  report.validate();
  return report;
}

MetricReport evaluate_files(const std::string& hyp_path,
                            const std::vector<std::string>& ref_paths, int refs_limit) {
  if (ref_paths.empty()) throw ContractError("evaluation needs at least one reference file");
  std::vector<DialogueRecord> hyp_records = load_corpus(hyp_path);

  struct RefEntry {
    std::string question;
    std::vector<TokenSeq> references;
  };
  std::map<std::string, RefEntry> refs;
  for (const std::string& path : ref_paths) {
    for (const DialogueRecord& r : load_corpus(path)) {
      RefEntry& entry = refs[r.id];
      if (entry.question.empty()) entry.question = r.question;
      entry.references.push_back(metric_tokens(r.answer));
      for (const std::string& extra : r.extra_answers) {
        entry.references.push_back(metric_tokens(extra));
      }
    }
  }

  std::vector<EvalItem> items;
  std::string missing;
  for (const DialogueRecord& h : hyp_records) {
    auto it = refs.find(h.id);
    if (it == refs.end()) {
      missing += missing.empty() ? h.id : ", " + h.id;
      continue;
    }
    EvalItem item;
    item.id = h.id;
    item.question = it->second.question.empty() ? h.question : it->second.question;
    item.hypothesis = metric_tokens(h.answer);
    item.references = it->second.references;
    if (refs_limit > 0 && static_cast<int>(item.references.size()) > refs_limit) {
      item.references.resize(static_cast<size_t>(refs_limit));
    }
    items.push_back(std::move(item));
  }
  if (!missing.empty()) {
    throw CorpusError("hypothesis ids missing from references: " + missing);
  }
  return evaluate_corpus(items);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report(std::ostream& os, const MetricReport& report) {
  for (int n = 0; n < 4; ++n) {
    os << "metric bleu_" << (n + 1) << " " << fmt(report.corpus_bleu[static_cast<size_t>(n)])
       << "\n";
  }
  os << "metric rouge_l " << fmt(report.rouge_l) << "\n";
  os << "metric meteor_simplified " << fmt(report.meteor) << "\n";
  os << "metric cider " << fmt(report.cider) << "\n";
  for (int t = 0; t < kQuestionTypeCount; ++t) {
    auto type = static_cast<QuestionType>(t);
    const auto& score = report.meteor_by_type[static_cast<size_t>(t)];
    os << "qtype " << question_type_name(type) << " "
       << (score ? fmt(*score) : std::string("null")) << " "
       << report.examples_by_type[static_cast<size_t>(t)] << "\n";
  }
}

}  // namespace tct
