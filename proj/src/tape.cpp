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

#include "tct/tape.hpp"

namespace tct {

thread_local Tape* Tape::active_ = nullptr;

Tape::Tape() {
  previous_ = active_;
  active_ = this;
}

Tape::~Tape() { active_ = previous_; }

void Tape::record(const char* op, std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> pull) {
  ops_.push_back(Recorded{op, std::move(inputs), std::move(output), std::move(pull)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  Tensor seed = loss;
  seed.add_grad(Vec::Ones(1));
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    it->pull();
  }
}

}  // namespace tct
