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

#include "tct/decoding.hpp"

#include <algorithm>
#include <cmath>

namespace tct {
namespace {

Vec log_softmax(const Vec& logits) {
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

struct Hypothesis {
  std::vector<int> tokens;
  double logp = 0.0;
  bool done = false;

  double score() const {
    return tokens.empty() ? 0.0 : logp / static_cast<double>(tokens.size());
  }
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score() != b.score()) return a.score() > b.score();
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

GenerationResult greedy(const std::function<Vec(const std::vector<int>&)>& step, int eos_id,
                        Index max_len) {
  GenerationResult res;
  for (Index t = 0; t < max_len; ++t) {
    Vec logits = step(res.tokens);
    Index next;
    logits.maxCoeff(&next);  // first maximum, so ties pick the lowest id
    res.tokens.push_back(static_cast<int>(next));
    if (static_cast<int>(next) == eos_id) return res;
  }
  res.truncated = true;
  return res;
}

GenerationResult beam(const std::function<Vec(const std::vector<int>&)>& step, int eos_id,
                      int width, Index max_len) {
  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;
  for (Index t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<Hypothesis> candidates = finished;
    for (const Hypothesis& h : live) {
      Vec logp = log_softmax(step(h.tokens));
      for (Index v = 0; v < logp.size(); ++v) {
        Hypothesis next = h;
        next.tokens.push_back(static_cast<int>(v));
        next.logp += logp[v];
        next.done = static_cast<int>(v) == eos_id;
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), better);
    if (candidates.size() > static_cast<size_t>(width)) candidates.resize(static_cast<size_t>(width));
    live.clear();
    finished.clear();
    for (Hypothesis& h : candidates) {
      (h.done ? finished : live).push_back(std::move(h));
    }
  }
  // Unfinished survivors compete on the same normalized score.
  std::vector<Hypothesis> all = finished;
  all.insert(all.end(), live.begin(), live.end());
  std::sort(all.begin(), all.end(), better);
  GenerationResult res;
  res.tokens = all.front().tokens;
  res.truncated = !all.front().done;
  return res;
}

}  // namespace

GenerationResult decode_sequence(const std::function<Vec(const std::vector<int>&)>& step,
                                 int eos_id, const DecodeConfig& cfg) {
  if (cfg.max_len < 1) throw ContractError("decode: max_len must be >= 1");
  if (cfg.mode == DecodeConfig::Mode::Greedy) return greedy(step, eos_id, cfg.max_len);
  if (cfg.beam_size < 1) throw ContractError("decode: beam size must be >= 1");
  return beam(step, eos_id, cfg.beam_size, cfg.max_len);
}

}  // namespace tct
