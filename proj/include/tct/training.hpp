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
#include <iosfwd>
#include <string>

#include "tct/attention.hpp"
#include "tct/rng.hpp"
#include "tct/tensor.hpp"

namespace tct {

// Inverse-square-root schedule with a linear warmup ramp:
// lr(s) = d_model^-1/2 * min(s^-1/2, s * warmup^-3/2).
struct WarmupSchedule {
  Index d_model = 32;
  Index warmup_steps = 400;

  double lr(Index step) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Bias-corrected Adam over a fixed parameter list. Missing gradients are
// zeros; non-finite gradients abort with the parameter's name.
class Adam {
 public:
  explicit Adam(NamedParams params, AdamConfig cfg = {});

  void step(double lr);
  void zero_grad();
  Index steps() const { return t_; }

 private:
  struct Slot {
    std::string name;
    Tensor param;
    Vec m, v;
  };
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  Index t_ = 0;
};

// Global-norm gradient clipping; no-op when max_norm <= 0.
void clip_gradients(const NamedParams& params, double max_norm);

struct TrainConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double dropout = 0.0;
  int batch_size = 16;
  Index max_steps = 2000;
  Index warmup_steps = 400;
  Index validation_interval = 200;
  double grad_clip = 0.0;
  uint64_t seed = 1;
  Index d_model = 32;  // feeds the schedule
};

struct StepLoss {
  double total = 0.0;
  double answer = 0.0;
  double caption = 0.0;
  double summary = 0.0;
};

struct ValidationStats {
  double perplexity = 0.0;
  double token_accuracy = 0.0;
};

struct TrainResult {
  std::string best_checkpoint;
  double best_perplexity = 0.0;
  Index best_step = 0;
  Index steps_run = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Task plumbing for the shared loop: per-example loss graph plus an
// evaluation pass. Batches are loss averages over length-bucketed
// example groups; one Adam step per batch.
struct TrainTask {
  Index train_size = 0;
  std::function<Index(Index)> sort_key;  // answer length, for bucketing
  // Builds the scalar loss for one example inside the caller's tape and
  // reports the logged pieces.
  std::function<Tensor(Index, const RunState&, StepLoss*)> example_loss;
  std::function<ValidationStats()> validate;
  NamedParams params;
};

// Writes train.log (step and validation records) under out_dir, keeps the
// best-perplexity checkpoint at out_dir/best.ckpt, and stops on any
// non-finite loss with the last good checkpoint intact.
TrainResult train_loop(const TrainTask& task, const TrainConfig& cfg, const std::string& out_dir);

}  // namespace tct
