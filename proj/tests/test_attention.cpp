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

#include "tct/attention.hpp"
#include "tct/gradcheck.hpp"

using namespace tct;

namespace {

Tensor rand_tensor(Shape shape, Rng rng, bool requires_grad = false) {
  Index n = numel(shape);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return make_tensor(std::move(shape), std::move(v), requires_grad);
}

void set_identity(Tensor t) {
  MatRM eye = MatRM::Identity(t.rows(), t.cols());
  t.value() = Eigen::Map<const Vec>(eye.data(), eye.size());
}

}  // namespace

TEST_CASE("single unmasked key returns V exactly") {
  Rng rng(1);
  Tensor q = rand_tensor({4, 3}, rng.fork("q"));
  Tensor k = rand_tensor({1, 3}, rng.fork("k"));
  Tensor v = rand_tensor({1, 5}, rng.fork("v"));
  Tensor out = scaled_dot_attention(q, k, v, AttentionMask::none());
  for (Index r = 0; r < 4; ++r) {
    for (Index c = 0; c < 5; ++c) CHECK(out.mat()(r, c) == v.mat()(0, c));
  }
}

TEST_CASE("orthogonal queries average the values uniformly") {
  Tensor q = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor k = Tensor::zeros({3, 2});
  Rng rng(2);
  Tensor v = rand_tensor({3, 4}, rng);
  Tensor out = scaled_dot_attention(q, k, v, AttentionMask::none());
  for (Index r = 0; r < 2; ++r) {
    for (Index c = 0; c < 4; ++c) {
      CHECK(out.mat()(r, c) == doctest::Approx(v.mat().col(c).mean()).epsilon(1e-12));
    }
  }
}

TEST_CASE("identity Q K V two-point case matches the scalar oracle") {
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor out = scaled_dot_attention(eye, eye, eye, AttentionMask::none());
  // Row logits are [1/sqrt 2, 0]; the scalar exp/sum oracle gives the weights.
  double z = std::exp(1.0 / std::sqrt(2.0));
  double w = z / (z + 1.0);
  CHECK(out.mat()(0, 0) == doctest::Approx(w).epsilon(1e-12));
  CHECK(out.mat()(0, 0) == doctest::Approx(0.6698).epsilon(1e-4));
  CHECK(out.mat()(0, 1) == doctest::Approx(0.3302).epsilon(1e-4));
  CHECK(out.mat()(1, 0) == doctest::Approx(0.3302).epsilon(1e-4));
  CHECK(out.mat()(1, 1) == doctest::Approx(0.6698).epsilon(1e-4));
}

TEST_CASE("all keys masked for a query row is a hard error") {
  Tensor q = Tensor::zeros({2, 2});
  Tensor kv = Tensor::zeros({2, 2});
  CHECK_THROWS_AS(scaled_dot_attention(q, kv, kv, AttentionMask::padding({1, 1})),
                  ContractError);
  // Causal row 0 always sees key 0, so a fully padded prefix also trips it.
  CHECK_THROWS_AS(scaled_dot_attention(q, kv, kv, AttentionMask::causal_padding({1, 0})),
                  ContractError);
}

TEST_CASE("masked keys get exactly zero weight") {
  Rng rng(3);
  Tensor q = rand_tensor({3, 4}, rng.fork("q"));
  Tensor k = rand_tensor({5, 4}, rng.fork("k"));
  Tensor v = rand_tensor({5, 4}, rng.fork("v"));
  AttentionMask mask = AttentionMask::padding({0, 1, 0, 1, 0});
  Tensor out = scaled_dot_attention(q, k, v, mask);
  // Rewriting the masked rows of V must not move a single bit.
  Tensor v2 = Tensor::from_matrix(MatRM(v.mat()));
  v2.value()[1 * 4 + 0] = 1e6;
  v2.value()[3 * 4 + 2] = -77.0;
  Tensor out2 = scaled_dot_attention(q, k, v2, mask);
  CHECK(out.value() == out2.value());
}

TEST_CASE("multi head with one identity head reduces to scaled dot attention") {
  Rng rng(4);
  MultiHeadAttention mha(3, 1, rng.fork("mha"));
  set_identity(mha.w_query[0]);
  set_identity(mha.w_key[0]);
  set_identity(mha.w_value[0]);
  set_identity(mha.w_out);
  Tensor q = rand_tensor({4, 3}, rng.fork("q"));
  Tensor kv = rand_tensor({6, 3}, rng.fork("kv"));
  Tensor a = mha.forward(q, kv, kv, AttentionMask::none());
  Tensor b = scaled_dot_attention(q, kv, kv, AttentionMask::none());
  CHECK(a.value() == b.value());
}

TEST_CASE("multi head output keeps the query shape") {
  Rng rng(5);
  MultiHeadAttention mha(16, 4, rng.fork("mha"));
  Tensor q = rand_tensor({5, 16}, rng.fork("q"));
  Tensor kv = rand_tensor({9, 16}, rng.fork("kv"));
  Tensor out = mha.forward(q, kv, kv, AttentionMask::none());
  CHECK(out.shape() == Shape{5, 16});
  CHECK_THROWS_AS(MultiHeadAttention(16, 3, rng.fork("bad")), ConfigError);
}

TEST_CASE("two head attention gradients match finite differences") {
  GradCheckReport r = gradcheck_attention(77);
  for (const auto& e : r.entries) {
    INFO(e.group);
    CHECK(e.max_rel_error < 1e-4);
  }
}

TEST_CASE("causal masking keeps prefixes bit identical under future perturbation") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Rng tr = rng.fork(static_cast<uint64_t>(trial));
    Index n = 2 + trial % 5;
    Index d = 4;
    Tensor x = rand_tensor({n, d}, tr.fork("x"));
    MultiHeadAttention mha(d, 2, tr.fork("mha"));
    Tensor out = mha.forward(x, x, x, AttentionMask::causal());

    Tensor x2 = Tensor::from_matrix(MatRM(x.mat()));
    Index t = n - 1;  // perturb the last position
    for (Index c = 0; c < d; ++c) x2.value()[t * d + c] += tr.uniform(0.5, 1.5);
    Tensor out2 = mha.forward(x2, x2, x2, AttentionMask::causal());
    for (Index r = 0; r < t; ++r) {
      for (Index c = 0; c < d; ++c) {
        CHECK(out.mat()(r, c) == out2.mat()(r, c));
      }
    }
  }
}

TEST_CASE("attention is equivariant to joint key value permutation") {
  Rng rng(7);
  Tensor q = rand_tensor({4, 6}, rng.fork("q"));
  Tensor k = rand_tensor({5, 6}, rng.fork("k"));
  Tensor v = rand_tensor({5, 3}, rng.fork("v"));
  Tensor out = scaled_dot_attention(q, k, v, AttentionMask::none());
  std::vector<Index> perm{3, 0, 4, 1, 2};
  MatRM kp(5, 6), vp(5, 3);
  for (Index i = 0; i < 5; ++i) {
    kp.row(i) = k.mat().row(perm[static_cast<size_t>(i)]);
    vp.row(i) = v.mat().row(perm[static_cast<size_t>(i)]);
  }
  Tensor out2 = scaled_dot_attention(q, Tensor::from_matrix(kp), Tensor::from_matrix(vp),
                                     AttentionMask::none());
  CHECK((out.value() - out2.value()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("attention outputs stay inside the convex hull of V") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Rng tr = rng.fork(static_cast<uint64_t>(trial));
    Tensor q = rand_tensor({3, 4}, tr.fork("q"));
    Tensor k = rand_tensor({6, 4}, tr.fork("k"));
    Tensor v = rand_tensor({6, 2}, tr.fork("v"));
    Tensor out = scaled_dot_attention(q, k, v, AttentionMask::none());
    for (Index c = 0; c < 2; ++c) {
      double lo = v.mat().col(c).minCoeff() - 1e-12;
      double hi = v.mat().col(c).maxCoeff() + 1e-12;
      for (Index r = 0; r < 3; ++r) {
        CHECK(out.mat()(r, c) >= lo);
        CHECK(out.mat()(r, c) <= hi);
      }
    }
  }
}

TEST_CASE("sublayer with a zero map is plain layer norm") {
  Rng rng(9);
  Tensor x = rand_tensor({4, 8}, rng.fork("x"));
  LayerNorm norm(8);
  RunState rs = RunState::eval();
  Tensor out = sublayer(
      x, [](const Tensor& in) { return Tensor::zeros(in.shape()); }, norm, rs);
  Tensor expect = norm.forward(x);
  CHECK(out.value() == expect.value());
  // Pre-gain rows center at zero.
  for (Index r = 0; r < out.rows(); ++r) {
    CHECK(std::abs(out.mat().row(r).mean()) < 1e-12);
  }
  CHECK_THROWS_AS(sublayer(
                      x, [](const Tensor& in) { return Tensor::zeros({in.rows(), 2}); }, norm, rs),
                  ContractError);
}

TEST_CASE("positional encoding") {
  Tensor pe = positional_encoding(7, 8);
  CHECK(pe.shape() == Shape{7, 8});
  for (Index c = 0; c < 8; ++c) {
    CHECK(pe.mat()(0, c) == (c % 2 == 0 ? 0.0 : 1.0));
  }
  CHECK(pe.value().minCoeff() >= -1.0);
  CHECK(pe.value().maxCoeff() <= 1.0);
  // Direct summation oracle: every row has squared norm d/2.
  for (Index t = 0; t < 7; ++t) {
    double dot = 0.0;
    for (Index c = 0; c < 8; ++c) dot += pe.mat()(t, c) * pe.mat()(t, c);
    CHECK(std::abs(dot - 4.0) < 1e-9);
  }
  // Slices agree with the full table.
  Tensor sl = positional_encoding_slice(3, 2, 8);
  CHECK(sl.mat()(0, 0) == pe.mat()(3, 0));
  CHECK(sl.mat()(1, 5) == pe.mat()(4, 5));
}
