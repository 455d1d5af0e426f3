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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tct/checkpoint.hpp"
#include "tct/corpus.hpp"
#include "tct/ops.hpp"
#include "tct/synthetic.hpp"
#include "tct/tasks.hpp"
#include "tct/training.hpp"

using namespace tct;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("tct_train_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct LogData {
  std::vector<double> losses;
  std::vector<std::pair<Index, double>> validations;  // (step, perplexity)
};

LogData parse_log(const std::string& path) {
  LogData data;
  std::ifstream is(path);
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "valid") {
      std::string step_kv, ppl_kv;
      ls >> step_kv >> ppl_kv;
      data.validations.emplace_back(std::stol(step_kv.substr(5)),
                                    std::stod(ppl_kv.substr(11)));
    } else if (head.rfind("step=", 0) == 0) {
      std::string lr_kv, loss_kv;
      ls >> lr_kv >> loss_kv;
      data.losses.push_back(std::stod(loss_kv.substr(5)));
    }
  }
  return data;
}

struct SmallSetup {
  ModelConfig model_config;
  std::vector<DialogueExample> train, valid;
  Vocabulary vocab;
};

SmallSetup small_setup() {
  SyntheticSpec spec;
  spec.vocab_words = 12;
  spec.min_len = 3;
  spec.max_len = 6;
  spec.train_size = 48;
  spec.valid_size = 12;
  spec.test_size = 4;
  spec.mapping = SyntheticSpec::Mapping::Reversal;
  spec.seed = 5;
  SyntheticCorpus corpus = generate_synthetic(spec);

  SmallSetup s;
  std::vector<DialogueRecord> all = corpus.train;
  all.insert(all.end(), corpus.valid.begin(), corpus.valid.end());
  s.vocab = build_vocabulary(all);
  for (const auto& r : corpus.train) s.train.push_back(to_example(r, s.vocab));
  for (const auto& r : corpus.valid) s.valid.push_back(to_example(r, s.vocab));

  s.model_config.d_model = 16;
  s.model_config.heads = 2;
  s.model_config.decoder_layers = 1;
  s.model_config.autoencoder_layers = 1;
  s.model_config.vocab_size = s.vocab.size();
  s.model_config.visual_dim = feature_dims(corpus.train).visual;
  s.model_config.audio_dim = feature_dims(corpus.train).audio;
  return s;
}

TrainConfig small_train_config(double alpha, double beta) {
  TrainConfig cfg;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.dropout = 0.0;
  cfg.batch_size = 6;
  cfg.max_steps = 150;
  cfg.warmup_steps = 60;
  cfg.validation_interval = 50;
  cfg.seed = 17;
  cfg.d_model = 16;
  return cfg;
}

TrainResult run_dialogue_training(const SmallSetup& s, MtnTct& model, const TrainConfig& cfg,
                                  const std::string& out_dir, double alpha, double beta) {
  DialogueTask task;
  task.model = &model;
  task.train = s.train;
  task.valid = s.valid;
  task.alpha = alpha;
  task.beta = beta;
  return train_loop(task.hooks(), cfg, out_dir);
}

}  // namespace

TEST_CASE("warmup schedule values and shape") {
  WarmupSchedule sched{32, 400};
  // Crossover: both branches coincide at the warmup step.
  double at_warmup = sched.lr(400);
  double ramp = 1.0 / std::sqrt(32.0) * (400.0 / (400.0 * std::sqrt(400.0)));
  double decay = 1.0 / std::sqrt(32.0) / std::sqrt(400.0);
  CHECK(ramp == doctest::Approx(decay).epsilon(1e-15));
  CHECK(at_warmup == doctest::Approx(decay).epsilon(1e-15));
  // Scalar oracle: 32^-1/2 * 400^-1/2.
  CHECK(at_warmup == doctest::Approx(0.008839).epsilon(1e-4));
  // Power-law decay after warmup.
  CHECK(sched.lr(800) / sched.lr(400) == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));
  // Strictly increasing on the ramp, decreasing after.
  CHECK(sched.lr(100) < sched.lr(200));
  CHECK(sched.lr(1000) < sched.lr(500));
  CHECK_THROWS_AS(sched.lr(0), ContractError);
}

TEST_CASE("adam basics") {
  Tensor w = Tensor::from({3}, {1.0, -2.0, 0.5});
  w.set_requires_grad(true);
  NamedParams params{{"w", w}};
  Adam adam(params);

  SUBCASE("zero gradient leaves parameters unchanged") {
    Vec before = w.value();
    adam.step(0.1);
    CHECK(w.value() == before);
  }
  SUBCASE("first step moves by about lr against the gradient sign") {
    w.add_grad(Vec(Eigen::Vector3d(0.3, -0.7, 0.0)));
    adam.step(0.01);
    CHECK(w.value()[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(w.value()[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
    CHECK(w.value()[2] == 0.5);
  }
  SUBCASE("non-finite gradients abort naming the parameter") {
    Vec g(3);
    g << 1.0, std::nan(""), 0.0;
    w.add_grad(g);
    try {
      adam.step(0.01);
      CHECK(false);
    } catch (const NumericsError& e) {
      CHECK(std::string(e.what()).find("'w'") != std::string::npos);
    }
  }
}

TEST_CASE("adam drives a convex quadratic to its optimum") {
  Rng rng(71);
  Index n = 8;
  Vec target(n);
  for (Index i = 0; i < n; ++i) target[i] = rng.uniform(-1.0, 1.0);
  Tensor a = make_tensor({n}, Vec(target), false);
  Tensor x = Tensor::zeros({n}, true);
  NamedParams params{{"x", x}};
  Adam adam(params);
  double loss_value = 0.0;
  for (int step = 0; step < 100; ++step) {
    Tape tape;
    Tensor diff = sub(x, a);
    Tensor loss = sum(mul(diff, diff));
    loss_value = loss.item();
    tape.backward(loss);
    adam.step(0.1);
    adam.zero_grad();
  }
  // Known minimum at x = a with value 0.
  CHECK(loss_value < 1e-3);
}

TEST_CASE("gradient clipping caps the global norm") {
  Tensor w = Tensor::zeros({4}, true);
  w.add_grad(Vec(Eigen::Vector4d(3.0, 0.0, 4.0, 0.0)));  // norm 5
  NamedParams params{{"w", w}};
  clip_gradients(params, 1.0);
  CHECK(std::abs(w.grad().norm() - 1.0) < 1e-12);
  clip_gradients(params, 10.0);  // already below, untouched
  CHECK(std::abs(w.grad().norm() - 1.0) < 1e-12);
}

TEST_CASE("training loop learns, logs, and selects checkpoints") {
  SmallSetup s = small_setup();
  TempDir dir("loop");
  MtnTct model(s.model_config, Rng(11).fork("model"));
  TrainConfig cfg = small_train_config(1.0, 1.0);
  TrainResult result = run_dialogue_training(s, model, cfg, dir.str(), 1.0, 1.0);
  CHECK(!result.aborted);
  CHECK(result.steps_run == 150);

  LogData log = parse_log(dir.str() + "/train.log");
  REQUIRE(log.losses.size() == 150);
  // 50-step smoothed windows decrease monotonically.
  std::vector<double> windows;
  for (size_t w = 0; w + 50 <= log.losses.size(); w += 50) {
    double sum = 0.0;
    for (size_t i = w; i < w + 50; ++i) sum += log.losses[i];
    windows.push_back(sum / 50.0);
  }
  REQUIRE(windows.size() == 3);
  CHECK(windows[1] < windows[0]);
  CHECK(windows[2] < windows[1]);

  // Reloading the best checkpoint reproduces the logged best perplexity.
  double best_logged = result.best_perplexity;
  MtnTct fresh(s.model_config, Rng(999).fork("fresh"));
  NamedParams fresh_params = fresh.named_parameters();
  load_checkpoint(result.best_checkpoint, fresh_params);
  ValidationStats stats = evaluate_dialogue(fresh, s.valid);
  CHECK(std::abs(stats.perplexity - best_logged) < 1e-9);

  // Validation is pure: a second pass is bit-identical.
  ValidationStats again = evaluate_dialogue(fresh, s.valid);
  CHECK(stats.perplexity == again.perplexity);
  CHECK(stats.token_accuracy == again.token_accuracy);
}

TEST_CASE("loss trajectories differ by weights but both descend") {
  SmallSetup s = small_setup();
  TempDir dir_a("alpha");
  TempDir dir_b("beta");
  MtnTct model_a(s.model_config, Rng(11).fork("model"));
  MtnTct model_b(s.model_config, Rng(11).fork("model"));
  run_dialogue_training(s, model_a, small_train_config(1.0, 1.0), dir_a.str(), 1.0, 1.0);
  run_dialogue_training(s, model_b, small_train_config(0.0, 0.0), dir_b.str(), 0.0, 0.0);
  LogData a = parse_log(dir_a.str() + "/train.log");
  LogData b = parse_log(dir_b.str() + "/train.log");
  CHECK(a.losses != b.losses);  // composite vs answer-only objective
  auto windows_decrease = [](const std::vector<double>& losses) {
    double w1 = 0.0, w3 = 0.0;
    for (size_t i = 0; i < 50; ++i) w1 += losses[i];
    for (size_t i = 100; i < 150; ++i) w3 += losses[i];
    return w3 < w1;
  };
  CHECK(windows_decrease(a.losses));
  CHECK(windows_decrease(b.losses));
}

TEST_CASE("identical seeds give bit-identical training runs") {
  SmallSetup s = small_setup();
  TempDir dir_a("rep_a");
  TempDir dir_b("rep_b");
  TrainConfig cfg = small_train_config(1.0, 1.0);
  cfg.max_steps = 60;
  cfg.dropout = 0.2;  // exercise the seeded dropout path
  MtnTct model_a(s.model_config, Rng(42).fork("model"));
  MtnTct model_b(s.model_config, Rng(42).fork("model"));
  run_dialogue_training(s, model_a, cfg, dir_a.str(), 1.0, 1.0);
  run_dialogue_training(s, model_b, cfg, dir_b.str(), 1.0, 1.0);
  CHECK(slurp(dir_a.str() + "/train.log") == slurp(dir_b.str() + "/train.log"));
  CHECK(slurp(dir_a.str() + "/best.ckpt") == slurp(dir_b.str() + "/best.ckpt"));
}

TEST_CASE("a non-finite loss aborts and keeps the last good checkpoint") {
  TempDir dir("abort");
  Tensor w = Tensor::zeros({2}, true);
  w.set_name("w");
  TrainTask task;
  task.train_size = 4;
  task.sort_key = [](Index) { return Index{1}; };
  task.example_loss = [&](Index, const RunState&, StepLoss* parts) {
    static int calls = 0;
    if (++calls > 6) throw NumericsError("add produced non-finite values");
    parts->total = 1.0;
    return sum(mul(w, w));
  };
  task.validate = [] { return ValidationStats{2.0, 0.5}; };
  task.params = {{"w", w}};

  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_steps = 50;
  cfg.validation_interval = 10;
  cfg.d_model = 4;
  TrainResult result = train_loop(task, cfg, dir.str());
  CHECK(result.aborted);
  CHECK(!result.abort_reason.empty());
  // The step-0 checkpoint survives the abort and still loads.
  NamedParams reload{{"w", Tensor::zeros({2})}};
  load_checkpoint(result.best_checkpoint, reload);
  std::string log = slurp(dir.str() + "/train.log");
  CHECK(log.find("abort") != std::string::npos);
}

TEST_CASE("zero training steps keep the initialization as best checkpoint") {
  SmallSetup s = small_setup();
  TempDir dir("zero");
  MtnTct model(s.model_config, Rng(5).fork("model"));
  NamedParams init = model.named_parameters();
  std::vector<Vec> before;
  for (auto& [name, t] : init) before.push_back(t.value());

  TrainConfig cfg = small_train_config(1.0, 1.0);
  cfg.max_steps = 0;
  TrainResult result = run_dialogue_training(s, model, cfg, dir.str(), 1.0, 1.0);
  CHECK(result.best_step == 0);

  MtnTct fresh(s.model_config, Rng(123).fork("other"));
  NamedParams fresh_params = fresh.named_parameters();
  load_checkpoint(result.best_checkpoint, fresh_params);
  for (size_t i = 0; i < fresh_params.size(); ++i) {
    CHECK(fresh_params[i].second.value() == before[i]);
  }
}
