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

#include <functional>
#include <vector>

#include "tct/tensor.hpp"

namespace tct {

struct GenerationResult {
  std::vector<int> tokens;  // sos excluded, eos included when reached
  bool truncated = false;   // max_len hit before eos
};

struct DecodeConfig {
  enum class Mode { Greedy, Beam };
  Mode mode = Mode::Greedy;
  int beam_size = 1;
  Index max_len = 30;
};

// Autoregressive decoding over a step function that maps the tokens
// generated so far (sos excluded) to next-token logits. Greedy takes the
// argmax each step; beam keeps beam_size hypotheses ranked by
// length-normalized log-probability. Ties break deterministically toward
// the lexicographically smaller token sequence.
GenerationResult decode_sequence(const std::function<Vec(const std::vector<int>&)>& step,
                                 int eos_id, const DecodeConfig& cfg);

}  // namespace tct
