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

#include <string>
#include <unordered_map>
#include <vector>

#include "tct/tensor.hpp"

namespace tct {

// Fixed reserved ids shared by every vocabulary.
inline constexpr int kPadId = 0;
inline constexpr int kSosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;

// Lowercases and splits on whitespace; punctuation characters become
// their own tokens.
std::vector<std::string> tokenize_text(const std::string& text);
std::string join_tokens(const std::vector<std::string>& tokens);

class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary from_tokens(const std::vector<std::string>& tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int add(const std::string& token);
  // Unknown tokens map to unk, or raise VocabError when unknowns are
  // disallowed (closed-vocabulary corpora).
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  Index size() const { return static_cast<Index>(tokens_.size()); }
  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  void set_allow_unknown(bool v) { allow_unknown_ = v; }
  bool allow_unknown() const { return allow_unknown_; }

  // tokenize + lookup, with eos appended: "" becomes [eos].
  std::vector<int> encode_text(const std::string& text) const;
  // Inverse rendering: reserved sentinels are dropped.
  std::string decode_text(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  bool allow_unknown_ = true;
};

}  // namespace tct
