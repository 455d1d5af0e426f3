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

#include <optional>
#include <string>
#include <vector>

#include "tct/model.hpp"
#include "tct/vocab.hpp"

namespace tct {

// One corpus record in raw text form. Dense features may sit inline in
// the record or in the sidecar feature file next to the corpus.
struct DialogueRecord {
  std::string id;
  std::vector<std::string> history;
  std::string question;
  std::string caption;
  std::string summary;
  std::string answer;
  std::vector<std::string> extra_answers;  // additional references for evaluation
  MatRM visual;  // 0x0 when absent
  MatRM audio;
};

// Line-delimited records with a leading header line; layout documented in
// docs/formats.md. Errors carry the file, line number, and field name.
std::vector<DialogueRecord> load_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<DialogueRecord>& records);

// First-appearance-order vocabulary over every text field.
Vocabulary build_vocabulary(const std::vector<DialogueRecord>& records);

DialogueExample to_example(const DialogueRecord& record, const Vocabulary& vocab);

// Feature widths found in a corpus (0 when a modality never appears);
// inconsistent widths raise CorpusError.
struct FeatureDims {
  Index visual = 0;
  Index audio = 0;
};
FeatureDims feature_dims(const std::vector<DialogueRecord>& records);

}  // namespace tct
