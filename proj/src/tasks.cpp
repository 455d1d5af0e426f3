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

#include "tct/tasks.hpp"

#include <cmath>

namespace tct {

ValidationStats evaluate_dialogue(const MtnTct& model,
                                  const std::vector<DialogueExample>& examples) {
  if (examples.empty()) throw ContractError("validation set is empty");
  double nll = 0.0;
  Index tokens = 0;
  Index hits = 0;
  for (const DialogueExample& ex : examples) {
    auto [n, t] = model.answer_nll(ex);
    nll += n;
    tokens += t;
    hits += model.answer_argmax_matches(ex);
  }
  ValidationStats stats;
  stats.perplexity = std::exp(nll / static_cast<double>(tokens));
  stats.token_accuracy = static_cast<double>(hits) / static_cast<double>(tokens);
  return stats;
}

TrainTask DialogueTask::hooks() const {
  TrainTask task;
  task.train_size = static_cast<Index>(train.size());
  const auto* train_ptr = &train;
  task.sort_key = [train_ptr](Index i) {
    return static_cast<Index>((*train_ptr)[static_cast<size_t>(i)].answer.size());
  };
  MtnTct* m = model;
  double a = alpha, b = beta;
  task.example_loss = [train_ptr, m, a, b](Index i, const RunState& rs, StepLoss* parts) {
    CompositeLoss loss = m->composite_loss((*train_ptr)[static_cast<size_t>(i)], a, b, rs);
    parts->total = loss.total.item();
    parts->answer = loss.answer.item();
    parts->caption = loss.caption.defined() ? loss.caption.item() : 0.0;
    parts->summary = loss.summary.item();
    return loss.total;
  };
  const auto* valid_ptr = &valid;
  task.validate = [valid_ptr, m] { return evaluate_dialogue(*m, *valid_ptr); };
  task.params = model->named_parameters();
  return task;
}

ValidationStats evaluate_translator(const TranslatorModel& model,
                                    const std::vector<TranslatorPair>& pairs) {
  if (pairs.empty()) throw ContractError("validation set is empty");
  double nll = 0.0;
  Index tokens = 0;
  Index hits = 0;
  for (const TranslatorPair& p : pairs) {
    auto [n, t] = model.target_nll(p.source, p.target);
    nll += n;
    tokens += t;
    hits += model.target_argmax_matches(p.source, p.target);
  }
  ValidationStats stats;
  stats.perplexity = std::exp(nll / static_cast<double>(tokens));
  stats.token_accuracy = static_cast<double>(hits) / static_cast<double>(tokens);
  return stats;
}

TrainTask TranslatorTask::hooks() const {
  TrainTask task;
  task.train_size = static_cast<Index>(train.size());
  const auto* train_ptr = &train;
  task.sort_key = [train_ptr](Index i) {
    return (*train_ptr)[static_cast<size_t>(i)].target.length();
  };
  TranslatorModel* m = model;
  task.example_loss = [train_ptr, m](Index i, const RunState& rs, StepLoss* parts) {
    const TranslatorPair& p = (*train_ptr)[static_cast<size_t>(i)];
    Tensor loss = m->loss(p.source, p.target, TranslationLossKind::Textual, rs);
    parts->total = loss.item();
    parts->answer = loss.item();
    return loss;
  };
  const auto* valid_ptr = &valid;
  task.validate = [valid_ptr, m] { return evaluate_translator(*m, *valid_ptr); };
  task.params = model->named_parameters();
  return task;
}

std::vector<TranslatorPair> to_translator_pairs(const std::vector<DialogueExample>& examples) {
  std::vector<TranslatorPair> pairs;
  pairs.reserve(examples.size());
  for (const DialogueExample& ex : examples) {
    TranslatorPair p;
    p.source = ModalitySequence::textual(ex.question);
    p.target = ModalitySequence::textual(ex.answer);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace tct
