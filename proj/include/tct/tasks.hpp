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

#include "tct/model.hpp"
#include "tct/training.hpp"
#include "tct/translator_model.hpp"

namespace tct {

// Trainable-task wiring shared by the CLI, the tests, and the acceptance
// suite: the full dialogue model over a corpus, or a standalone
// translator over (source, target) sequence pairs.

struct DialogueTask {
  MtnTct* model = nullptr;
  std::vector<DialogueExample> train;
  std::vector<DialogueExample> valid;
  double alpha = 1.0;
  double beta = 1.0;

  TrainTask hooks() const;
};

ValidationStats evaluate_dialogue(const MtnTct& model,
                                  const std::vector<DialogueExample>& examples);

struct TranslatorPair {
  ModalitySequence source;
  ModalitySequence target;
};

struct TranslatorTask {
  TranslatorModel* model = nullptr;
  std::vector<TranslatorPair> train;
  std::vector<TranslatorPair> valid;

  TrainTask hooks() const;
};

ValidationStats evaluate_translator(const TranslatorModel& model,
                                    const std::vector<TranslatorPair>& pairs);

// Question -> answer pairs for the translator task.
std::vector<TranslatorPair> to_translator_pairs(const std::vector<DialogueExample>& examples);

}  // namespace tct
