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
#include <string>
#include <vector>

#include "tct/tensor.hpp"

namespace tct {

// Reverse-mode gradient tape. Constructing a Tape makes it the active
// recorder on the current thread; ops executed while it is active append
// themselves in forward (topological) order. backward() replays the tape
// once, in reverse. A Tape must stay on the thread that created it.
//
// With no active tape, ops run forward-only and produce detached results;
// evaluation and generation run this way.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Seeds d(loss)/d(loss) = 1 and pulls gradients back through every
  // recorded op. loss must be scalar (size 1).
  void backward(const Tensor& loss);

  std::size_t size() const { return ops_.size(); }

  static Tape* active() { return active_; }

  // Called by op implementations. pull() reads the output's accumulated
  // gradient and adds each input's contribution.
  void record(const char* op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> pull);

 private:
  struct Recorded {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> pull;
  };
  std::vector<Recorded> ops_;
  Tape* previous_ = nullptr;
  static thread_local Tape* active_;
};

}  // namespace tct
