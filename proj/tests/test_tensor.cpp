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
#include <cstdio>
#include <filesystem>
#include <limits>

#include "tct/checkpoint.hpp"
#include "tct/gradcheck.hpp"
#include "tct/ops.hpp"
#include "tct/rng.hpp"
#include "tct/tape.hpp"

using namespace tct;

namespace {

Tensor rand_tensor(Shape shape, Rng rng, bool requires_grad = true) {
  Index n = numel(shape);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return make_tensor(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("matmul basics") {
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor m = Tensor::from({2, 2}, {5, 6, 7, 8});
  Tensor out = matmul(eye, m);
  CHECK(out.value()[0] == 5.0);
  CHECK(out.value()[1] == 6.0);
  CHECK(out.value()[2] == 7.0);
  CHECK(out.value()[3] == 8.0);

  Tensor a = Tensor::from({1, 2}, {1, 2});
  Tensor b = Tensor::from({2, 1}, {3, 4});
  CHECK(matmul(a, b).item() == 11.0);

  CHECK_THROWS_AS(matmul(a, Tensor::from({3, 1}, {1, 2, 3})), ShapeError);
  try {
    matmul(a, Tensor::from({3, 1}, {1, 2, 3}));
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[1,2]") != std::string::npos);
    CHECK(msg.find("[3,1]") != std::string::npos);
  }
}

TEST_CASE("matmul gradient matches the closed form and finite differences") {
  Tensor a = Tensor::from({1, 2}, {1, 2});
  Tensor b = Tensor::from({2, 1}, {3, 4});
  a.set_requires_grad(true);
  {
    Tape tape;
    Tensor loss = sum(matmul(a, b));
    tape.backward(loss);
  }
  CHECK(a.grad()[0] == doctest::Approx(3.0));
  CHECK(a.grad()[1] == doctest::Approx(4.0));

  auto fn = [&] { return sum(matmul(a, b)); };
  GradCheckReport r = gradcheck(fn, {{"a", a}});
  CHECK(r.worst() < 1e-4);
}

TEST_CASE("softmax rows") {
  Tensor uniform = softmax(Tensor::from({3}, {0, 0, 0}));
  for (int i = 0; i < 3; ++i) CHECK(uniform.value()[i] == doctest::Approx(1.0 / 3));

  double inf = std::numeric_limits<double>::infinity();
  Tensor masked = softmax(Tensor::from({2}, {-inf, 0}));
  CHECK(masked.value()[0] == 0.0);  // exactly
  CHECK(masked.value()[1] == 1.0);

  // Scalar exp/sum oracle for the two-logit case.
  double e0 = std::exp(0.7071), e1 = std::exp(0.0);
  Tensor two = softmax(Tensor::from({2}, {0.7071, 0}));
  CHECK(two.value()[0] == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-12));
  CHECK(two.value()[0] == doctest::Approx(0.6698).epsilon(1e-4));
  CHECK(two.value()[1] == doctest::Approx(0.3302).epsilon(1e-4));

  // Row sums stay within 1e-12 of one.
  Rng rng(3);
  Tensor x = rand_tensor({17, 9}, rng, false);
  Tensor y = softmax(x);
  for (Index r = 0; r < y.rows(); ++r) {
    CHECK(std::abs(y.mat().row(r).sum() - 1.0) < 1e-12);
  }

  // A fully 0-probability row is an error state, not a silent uniform.
  CHECK_THROWS_AS(softmax(Tensor::from({2}, {-inf, -inf})), NumericsError);
}

TEST_CASE("relu and elementwise") {
  Tensor x = Tensor::from({2}, {-1, 2});
  Tensor y = relu(x);
  CHECK(y.value()[0] == 0.0);
  CHECK(y.value()[1] == 2.0);

  Tensor a = Tensor::from({3}, {1, 2, 3});
  a.set_requires_grad(true);
  {
    Tape tape;
    Tensor loss = sum(mul(a, a));
    tape.backward(loss);
  }
  CHECK(a.grad()[0] == 2.0);
  CHECK(a.grad()[1] == 4.0);
  CHECK(a.grad()[2] == 6.0);
}

TEST_CASE("backward fills ones for sum and accumulates over fan-out") {
  Tensor x = Tensor::from({3}, {5, -2, 0.5});
  x.set_requires_grad(true);
  {
    Tape tape;
    Tensor loss = sum(x);
    tape.backward(loss);
  }
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 1.0);

  x.zero_grad();
  {
    Tape tape;
    Tensor loss = sum(add(x, x));
    tape.backward(loss);
  }
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == 2.0);

  Tape tape;
  Tensor vec = add(x, x);
  CHECK_THROWS_AS(tape.backward(vec), ContractError);
}

TEST_CASE("cross entropy of uniform logits is log vocabulary size") {
  Tensor logits = Tensor::constant({3, 8}, 0.25);
  Tensor l = cross_entropy(logits, {5, 1, 7}, 0);
  CHECK(l.item() == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  CHECK(l.item() == doctest::Approx(2.0794).epsilon(1e-4));

  CHECK_THROWS_AS(cross_entropy(logits, {5, 9, 7}, 0), VocabError);
  CHECK_THROWS_AS(cross_entropy(logits, {0, 0, 0}, 0), ContractError);
  Tensor uneven = Tensor::from({2, 2}, {3, 1, 0, 2});
  // Pad rows are excluded from the average.
  Tensor masked = cross_entropy(uneven, {1, 0}, 0);
  double expect = -std::log(std::exp(1.0) / (std::exp(3.0) + std::exp(1.0)));
  CHECK(masked.item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("l1 and cosine losses") {
  Rng rng(11);
  Tensor p = rand_tensor({4, 3}, rng, false);
  std::vector<uint8_t> keep{1, 1, 1, 1};
  CHECK(l1_loss(p, p, keep).item() == 0.0);

  Tensor flipped = scale(p, -1.0);
  CHECK(cosine_similarity_loss(flipped, p, keep).item() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cosine_similarity_loss(p, p, keep).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("layer norm output statistics and shift invariance") {
  Rng rng(7);
  Tensor x = rand_tensor({5, 16}, rng, false);
  Tensor gain = Tensor::constant({16}, 1.0);
  Tensor bias = Tensor::zeros({16});
  Tensor y = layer_norm(x, gain, bias);
  for (Index r = 0; r < y.rows(); ++r) {
    double mean = y.mat().row(r).mean();
    double var = (y.mat().row(r).array() - mean).square().sum() / 16.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
  // Adding a constant to every feature of a row changes nothing.
  Tensor shifted = add(x, Tensor::constant({5, 16}, 3.7));
  Tensor y2 = layer_norm(shifted, gain, bias);
  CHECK((y.value() - y2.value()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("dropout") {
  Rng rng(5);
  Tensor x = rand_tensor({6, 6}, rng, false);
  Rng drop(99);
  Tensor eval_out = dropout(x, 0.5, false, drop);
  CHECK(eval_out.same_node(x));  // evaluation is a no-op

  Tensor zero_p = dropout(x, 0.0, true, drop);
  CHECK(zero_p.same_node(x));

  Tensor train_out = dropout(x, 0.5, true, drop);
  int kept = 0, zeroed = 0;
  for (Index i = 0; i < x.size(); ++i) {
    double ratio = train_out.value()[i] / x.value()[i];
    if (train_out.value()[i] == 0.0) {
      ++zeroed;
    } else {
      CHECK(ratio == doctest::Approx(2.0).epsilon(1e-12));
      ++kept;
    }
  }
  CHECK(kept > 0);
  CHECK(zeroed > 0);
  CHECK_THROWS_AS(dropout(x, 1.0, true, drop), ContractError);
}

TEST_CASE("embedding lookup and gather") {
  Tensor table = Tensor::from({3, 2}, {0, 1, 10, 11, 20, 21});
  Tensor rows = embedding_lookup(table, {2, 0});
  CHECK(rows.value()[0] == 20.0);
  CHECK(rows.value()[3] == 1.0);
  CHECK_THROWS_AS(embedding_lookup(table, {3}), VocabError);
  CHECK_THROWS_AS(embedding_lookup(table, {-1}), VocabError);
}

TEST_CASE("non-finite forward results are an error, never silent") {
  Tensor huge = Tensor::constant({2, 2}, 1e308);
  CHECK_THROWS_AS(mul(huge, huge), NumericsError);
}

TEST_CASE("finite differences validate every primitive") {
  GradCheckReport r = gradcheck_primitives(1234);
  for (const auto& e : r.entries) {
    INFO(e.group);
    CHECK(e.max_rel_error < 1e-4);
  }
}

TEST_CASE("forward and backward are bit-deterministic") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Tensor a = rand_tensor({6, 5}, rng.fork("a"));
    Tensor b = rand_tensor({5, 4}, rng.fork("b"));
    Tape tape;
    Rng drop(seed + 1);
    Tensor h = dropout(relu(matmul(a, b)), 0.25, true, drop);
    Tensor loss = sum(mul(h, h));
    tape.backward(loss);
    return std::make_tuple(loss.item(), Vec(a.grad()), Vec(b.grad()));
  };
  auto [l1, ga1, gb1] = run(42);
  auto [l2, ga2, gb2] = run(42);
  CHECK(l1 == l2);
  CHECK(ga1 == ga2);
  CHECK(gb1 == gb2);
}

TEST_CASE("rng streams are stable and forks are independent") {
  Rng a(9);
  Rng b(9);
  for (int i = 0; i < 8; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng f1 = Rng(9).fork("alpha");
  Rng f2 = Rng(9).fork("beta");
  CHECK(f1.next_u64() != f2.next_u64());
  int lo = 0, hi = 0;
  Rng c(123);
  for (int i = 0; i < 1000; ++i) {
    int v = c.uniform_int(2, 5);
    CHECK(v >= 2);
    CHECK(v <= 5);
    if (v == 2) ++lo;
    if (v == 5) ++hi;
  }
  CHECK(lo > 0);
  CHECK(hi > 0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(31);
  NamedParams params{{"w", rand_tensor({4, 3}, rng.fork("w"))},
                     {"b", rand_tensor({3}, rng.fork("b"))}};
  std::string path = (std::filesystem::temp_directory_path() / "tct_ckpt_test.bin").string();
  save_checkpoint(path, params);

  NamedParams reloaded{{"w", Tensor::zeros({4, 3})}, {"b", Tensor::zeros({3})}};
  load_checkpoint(path, reloaded);
  CHECK(reloaded[0].second.value() == params[0].second.value());
  CHECK(reloaded[1].second.value() == params[1].second.value());

  NamedParams wrong_shape{{"w", Tensor::zeros({4, 4})}, {"b", Tensor::zeros({3})}};
  CHECK_THROWS_AS(load_checkpoint(path, wrong_shape), ConfigError);
  try {
    load_checkpoint(path, wrong_shape);
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[4,3]") != std::string::npos);
    CHECK(msg.find("[4,4]") != std::string::npos);
  }
  NamedParams wrong_name{{"w2", Tensor::zeros({4, 3})}, {"b", Tensor::zeros({3})}};
  CHECK_THROWS_AS(load_checkpoint(path, wrong_name), ConfigError);
  std::filesystem::remove(path);
}
