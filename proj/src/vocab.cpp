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

#include "tct/vocab.hpp"

#include <cctype>
#include <fstream>

namespace tct {

std::vector<std::string> tokenize_text(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<sos>", "<eos>", "<unk>"}) add(t);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const std::string& t : tokens) v.add(t);
  return v;
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  if (!allow_unknown_) {
    throw CorpusError("token '" + token + "' not in vocabulary and unknowns are disallowed");
  }
  return kUnkId;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= static_cast<int>(tokens_.size())) {
    throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode_text(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& t : tokenize_text(text)) ids.push_back(id(t));
  ids.push_back(kEosId);
  return ids;
}

std::string Vocabulary::decode_text(const std::vector<int>& ids) const {
  std::vector<std::string> toks;
  for (int i : ids) {
    if (i == kPadId || i == kSosId || i == kEosId) continue;
    toks.push_back(token(i));
  }
  return join_tokens(toks);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write vocabulary: " + path);
  for (const std::string& t : tokens_) os << t << '\n';
  if (!os) throw Error("write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open vocabulary: " + path);
  Vocabulary v;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (lineno <= 4) {
      // Reserved rows; trust but verify.
      if (line != v.tokens_[static_cast<size_t>(lineno - 1)]) {
        throw CorpusError(path + ":" + std::to_string(lineno) +
                          ": reserved vocabulary row is '" + line + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    v.add(line);
  }
  return v;
}

}  // namespace tct
