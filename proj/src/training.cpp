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

#include "tct/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "tct/checkpoint.hpp"
#include "tct/ops.hpp"

namespace tct {

double WarmupSchedule::lr(Index step) const {
  if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
  if (step < 1) throw ContractError("learning-rate schedule starts at step 1");
  double s = static_cast<double>(step);
  double w = static_cast<double>(warmup_steps);
  return 1.0 / std::sqrt(static_cast<double>(d_model)) *
         std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

Adam::Adam(NamedParams params, AdamConfig cfg) : cfg_(cfg) {
  slots_.reserve(params.size());
  for (auto& [name, t] : params) {
    slots_.push_back(Slot{name, t, Vec::Zero(t.size()), Vec::Zero(t.size())});
  }
}

void Adam::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Slot& s : slots_) {
    Vec g = s.param.has_grad() ? s.param.grad() : Vec(Vec::Zero(s.param.size()));
    if (!g.allFinite()) {
      throw NumericsError("gradient for parameter '" + s.name + "' is not finite");
    }
    s.m = cfg_.beta1 * s.m + (1.0 - cfg_.beta1) * g;
    s.v = cfg_.beta2 * s.v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    Vec update = ((s.m / bc1).array() / ((s.v / bc2).array().sqrt() + cfg_.eps)).matrix();
    s.param.value() -= lr * update;
  }
}

void Adam::zero_grad() {
  for (Slot& s : slots_) s.param.zero_grad();
}

void clip_gradients(const NamedParams& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double total = 0.0;
  for (const auto& [name, t] : params) {
    if (t.has_grad()) total += t.grad().squaredNorm();
  }
  total = std::sqrt(total);
  if (total <= max_norm) return;
  double factor = max_norm / total;
  for (const auto& [name, t] : params) {
    if (t.has_grad()) {
      Tensor mutable_t = t;
      Vec scaled = t.grad() * factor;
      mutable_t.zero_grad();
      mutable_t.add_grad(scaled);
    }
  }
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrainResult train_loop(const TrainTask& task, const TrainConfig& cfg, const std::string& out_dir) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::filesystem::create_directories(out_dir);
  std::string log_path = out_dir + "/train.log";
  std::string ckpt_path = out_dir + "/best.ckpt";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw Error("cannot write training log: " + log_path);

  // Length-bucketed batches: sort by the task's key, chunk, shuffle the
  // chunk order each epoch.
  std::vector<Index> order(static_cast<size_t>(task.train_size));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return task.sort_key(a) < task.sort_key(b); });
  std::vector<std::vector<Index>> batches;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(cfg.batch_size)) {
    size_t end = std::min(order.size(), i + static_cast<size_t>(cfg.batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }

  Rng root(cfg.seed);
  WarmupSchedule schedule{cfg.d_model, cfg.warmup_steps};
  Adam adam(task.params);

  TrainResult result;
  result.best_perplexity = std::numeric_limits<double>::infinity();

  auto run_validation = [&](Index step) {
    ValidationStats stats = task.validate();
    log << "valid step=" << step << " perplexity=" << fmt(stats.perplexity)
        << " accuracy=" << fmt(stats.token_accuracy) << "\n";
    log.flush();
    if (stats.perplexity < result.best_perplexity) {
      result.best_perplexity = stats.perplexity;
      result.best_step = step;
      save_checkpoint(ckpt_path, task.params);
    }
  };

  run_validation(0);
  result.best_checkpoint = ckpt_path;

  Index step = 0;
  size_t batch_cursor = 0;
  Index epoch = 0;
  std::vector<size_t> batch_order(batches.size());
  std::iota(batch_order.begin(), batch_order.end(), size_t{0});
  auto reshuffle = [&](Index e) {
    Rng shuffle = root.fork("shuffle").fork(static_cast<uint64_t>(e));
    for (size_t i = batch_order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(batch_order[i - 1], batch_order[j]);
    }
  };
  if (!batches.empty()) reshuffle(epoch);

  while (step < cfg.max_steps && !batches.empty()) {
    ++step;
    const std::vector<Index>& batch = batches[batch_order[batch_cursor]];
    ++batch_cursor;
    if (batch_cursor == batches.size()) {
      batch_cursor = 0;
      ++epoch;
      reshuffle(epoch);
    }

    Rng step_rng = root.fork("dropout").fork(static_cast<uint64_t>(step));
    RunState rs = RunState::train(cfg.dropout, &step_rng);

    StepLoss mean;
    double lr = schedule.lr(step);
    try {
      Tape tape;
      Tensor total;
      for (Index idx : batch) {
        StepLoss parts;
        Tensor loss = task.example_loss(idx, rs, &parts);
        mean.total += parts.total;
        mean.answer += parts.answer;
        mean.caption += parts.caption;
        mean.summary += parts.summary;
        total = total.defined() ? add(total, loss) : loss;
      }
      total = scale(total, 1.0 / static_cast<double>(batch.size()));
      if (!std::isfinite(total.item())) {
        throw NumericsError("training loss is not finite");
      }
      tape.backward(total);
      clip_gradients(task.params, cfg.grad_clip);
      adam.step(lr);
      adam.zero_grad();
    } catch (const NumericsError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      log << "abort step=" << step << " reason=" << e.what() << "\n";
      break;
    }

    double n = static_cast<double>(batch.size());
    log << "step=" << step << " lr=" << fmt(lr) << " loss=" << fmt(mean.total / n)
        << " answer=" << fmt(mean.answer / n) << " caption=" << fmt(mean.caption / n)
        << " summary=" << fmt(mean.summary / n) << "\n";

    if (cfg.validation_interval > 0 &&
        (step % cfg.validation_interval == 0 || step == cfg.max_steps)) {
      run_validation(step);
    }
  }
  result.steps_run = step;
  return result;
}

}  // namespace tct
