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

#include "tct/gradcheck.hpp"

#include <cmath>
#include <ostream>

#include "tct/model.hpp"
#include "tct/tct_block.hpp"

namespace tct {

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

void GradCheckReport::merge(const GradCheckReport& other, const std::string& prefix) {
  for (const auto& e : other.entries) {
    entries.push_back({prefix.empty() ? e.group : prefix + "." + e.group, e.max_rel_error});
  }
}

GradCheckReport gradcheck(const std::function<Tensor()>& loss_fn, const NamedParams& leaves,
                          double step) {
  for (const auto& [name, t] : leaves) {
    Tensor leaf = t;
    leaf.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = loss_fn();
    tape.backward(loss);
  }
  std::vector<Vec> analytic;
  analytic.reserve(leaves.size());
  for (const auto& [name, t] : leaves) {
    analytic.push_back(t.has_grad() ? t.grad() : Vec(Vec::Zero(t.size())));
  }

  GradCheckReport report;
  for (size_t k = 0; k < leaves.size(); ++k) {
    Tensor leaf = leaves[k].second;
    double worst = 0.0;
    for (Index i = 0; i < leaf.size(); ++i) {
      double saved = leaf.value()[i];
      leaf.value()[i] = saved + step;
      double up = loss_fn().item();
      leaf.value()[i] = saved - step;
      double down = loss_fn().item();
      leaf.value()[i] = saved;
      double numeric = (up - down) / (2.0 * step);
      double rel = std::abs(analytic[k][i] - numeric) / (std::abs(numeric) + 1e-8);
      worst = std::max(worst, rel);
    }
    report.entries.push_back({leaves[k].first, worst});
  }
  return report;
}

void print_report(std::ostream& os, const GradCheckReport& report, double tol) {
  for (const auto& e : report.entries) {
    os << (e.max_rel_error < tol ? "  ok   " : "  FAIL ") << e.group
       << "  max_rel_error=" << e.max_rel_error << "\n";
  }
  os << (report.pass(tol) ? "PASS" : "FAIL") << "  worst=" << report.worst() << "  tol=" << tol
     << "\n";
}

namespace {

Tensor rand_leaf(Shape shape, Rng rng, double lo = -1.0, double hi = 1.0) {
  Index n = numel(shape);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return make_tensor(std::move(shape), std::move(v), true);
}

// Keeps values away from the relu / l1 kinks so central differences stay
// on one side.
void nudge_from_zero(Tensor t, double margin = 0.05) {
  for (Index i = 0; i < t.size(); ++i) {
    double& v = t.value()[i];
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  }
}

// Fixed-weight scalar readout; breaks symmetry so every output element
// influences the loss differently.
Tensor readout(const Tensor& out, const Tensor& weights) { return sum(mul(out, weights)); }

}  // namespace

GradCheckReport gradcheck_primitives(uint64_t seed) {
  Rng root(seed);
  GradCheckReport report;

  {
    Tensor a = rand_leaf({3, 4}, root.fork("matmul.a"));
    Tensor b = rand_leaf({4, 2}, root.fork("matmul.b"));
    Tensor r = rand_leaf({3, 2}, root.fork("matmul.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(matmul(a, b), r); };
    report.merge(gradcheck(fn, {{"matmul.a", a}, {"matmul.b", b}}));
  }
  {
    Tensor a = rand_leaf({3, 4}, root.fork("transpose.a"));
    Tensor r = rand_leaf({4, 3}, root.fork("transpose.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(transpose(a), r); };
    report.merge(gradcheck(fn, {{"transpose.a", a}}));
  }
  {
    Tensor a = rand_leaf({2, 5}, root.fork("ew.a"));
    Tensor b = rand_leaf({2, 5}, root.fork("ew.b"));
    Tensor r = rand_leaf({2, 5}, root.fork("ew.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(scale(add(mul(a, b), sub(a, b)), 0.7), r); };
    report.merge(gradcheck(fn, {{"elementwise.a", a}, {"elementwise.b", b}}));
  }
  {
    Tensor m = rand_leaf({3, 4}, root.fork("rowwise.m"));
    Tensor v = rand_leaf({4}, root.fork("rowwise.v"));
    Tensor r = rand_leaf({3, 4}, root.fork("rowwise.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(add_rowwise(m, v), r); };
    report.merge(gradcheck(fn, {{"add_rowwise.m", m}, {"add_rowwise.v", v}}));
  }
  {
    Tensor x = rand_leaf({3, 5}, root.fork("softmax.x"), -2.0, 2.0);
    Tensor r = rand_leaf({3, 5}, root.fork("softmax.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(softmax(x), r); };
    report.merge(gradcheck(fn, {{"softmax.x", x}}));
  }
  {
    Tensor x = rand_leaf({3, 4}, root.fork("relu.x"));
    nudge_from_zero(x);
    Tensor r = rand_leaf({3, 4}, root.fork("relu.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(relu(x), r); };
    report.merge(gradcheck(fn, {{"relu.x", x}}));
  }
  {
    Tensor x = rand_leaf({3, 6}, root.fork("ln.x"));
    Tensor gain = rand_leaf({6}, root.fork("ln.gain"), 0.5, 1.5);
    Tensor bias = rand_leaf({6}, root.fork("ln.bias"));
    Tensor r = rand_leaf({3, 6}, root.fork("ln.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(layer_norm(x, gain, bias), r); };
    report.merge(
        gradcheck(fn, {{"layer_norm.x", x}, {"layer_norm.gain", gain}, {"layer_norm.bias", bias}}));
  }
  {
    Tensor x = rand_leaf({4, 5}, root.fork("dropout.x"));
    Tensor r = rand_leaf({4, 5}, root.fork("dropout.r"));
    r.set_requires_grad(false);
    auto fn = [&] {
      Rng drop(seed + 17);  // same mask on every evaluation
      return readout(dropout(x, 0.3, true, drop), r);
    };
    report.merge(gradcheck(fn, {{"dropout.x", x}}));
  }
  {
    Tensor a = rand_leaf({2, 3}, root.fork("concat.a"));
    Tensor b = rand_leaf({4, 3}, root.fork("concat.b"));
    Tensor c = rand_leaf({2, 5}, root.fork("concat.c"));
    Tensor r0 = rand_leaf({6, 3}, root.fork("concat.r0"));
    Tensor r1 = rand_leaf({2, 8}, root.fork("concat.r1"));
    r0.set_requires_grad(false);
    r1.set_requires_grad(false);
    auto fn = [&] {
      std::vector<Tensor> rows{a, b};
      std::vector<Tensor> cols{a, c};
      return add(readout(concat(rows, 0), r0), readout(concat(cols, 1), r1));
    };
    report.merge(gradcheck(fn, {{"concat.a", a}, {"concat.b", b}, {"concat.c", c}}));
  }
  {
    Tensor table = rand_leaf({7, 4}, root.fork("embed.table"));
    std::vector<int> ids{1, 4, 1, 6, 0};  // repeated id exercises accumulation
    Tensor r = rand_leaf({5, 4}, root.fork("embed.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(embedding_lookup(table, ids), r); };
    report.merge(gradcheck(fn, {{"embedding_lookup.table", table}}));
  }
  {
    Tensor logits = rand_leaf({5, 7}, root.fork("ce.logits"), -2.0, 2.0);
    std::vector<int> targets{2, 6, 0 /*pad*/, 3, 2};
    auto fn = [&] { return cross_entropy(logits, targets, 0); };
    report.merge(gradcheck(fn, {{"cross_entropy.logits", logits}}));
  }
  {
    Tensor pred = rand_leaf({4, 3}, root.fork("l1.pred"));
    Tensor target = rand_leaf({4, 3}, root.fork("l1.target"));
    Tensor diff = sub(pred, target);
    nudge_from_zero(diff);
    pred = add(target, diff);
    pred.set_requires_grad(true);
    std::vector<uint8_t> keep{1, 1, 0, 1};
    auto fn = [&] { return l1_loss(pred, target, keep); };
    report.merge(gradcheck(fn, {{"l1_loss.pred", pred}, {"l1_loss.target", target}}));
  }
  {
    Tensor pred = rand_leaf({4, 3}, root.fork("cos.pred"));
    Tensor target = rand_leaf({4, 3}, root.fork("cos.target"));
    std::vector<uint8_t> keep{1, 0, 1, 1};
    auto fn = [&] { return cosine_similarity_loss(pred, target, keep); };
    report.merge(gradcheck(fn, {{"cosine_loss.pred", pred}, {"cosine_loss.target", target}}));
  }
  {
    Tensor x = rand_leaf({5}, root.fork("sum.x"));
    auto fn = [&] { return sum(x); };
    report.merge(gradcheck(fn, {{"sum.x", x}}));
  }
  return report;
}

GradCheckReport gradcheck_attention(uint64_t seed) {
  Rng root(seed);
  GradCheckReport report;

  {
    Tensor q = rand_leaf({4, 3}, root.fork("sdpa.q"));
    Tensor k = rand_leaf({5, 3}, root.fork("sdpa.k"));
    Tensor v = rand_leaf({5, 2}, root.fork("sdpa.v"));
    Tensor r = rand_leaf({4, 2}, root.fork("sdpa.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(scaled_dot_attention(q, k, v, AttentionMask::none()), r); };
    report.merge(gradcheck(fn, {{"sdpa.q", q}, {"sdpa.k", k}, {"sdpa.v", v}}));
  }
  {
    Tensor q = rand_leaf({4, 3}, root.fork("sdpa_causal.q"));
    Tensor k = rand_leaf({4, 3}, root.fork("sdpa_causal.k"));
    Tensor v = rand_leaf({4, 2}, root.fork("sdpa_causal.v"));
    Tensor r = rand_leaf({4, 2}, root.fork("sdpa_causal.r"));
    r.set_requires_grad(false);
    auto fn = [&] { return readout(scaled_dot_attention(q, k, v, AttentionMask::causal()), r); };
    report.merge(
        gradcheck(fn, {{"sdpa_causal.q", q}, {"sdpa_causal.k", k}, {"sdpa_causal.v", v}}));
  }
  {
    Tensor q = rand_leaf({3, 3}, root.fork("sdpa_pad.q"));
    Tensor k = rand_leaf({5, 3}, root.fork("sdpa_pad.k"));
    Tensor v = rand_leaf({5, 2}, root.fork("sdpa_pad.v"));
    Tensor r = rand_leaf({3, 2}, root.fork("sdpa_pad.r"));
    r.set_requires_grad(false);
    AttentionMask mask = AttentionMask::padding({0, 0, 1, 0, 1});
    auto fn = [&] { return readout(scaled_dot_attention(q, k, v, mask), r); };
    report.merge(gradcheck(fn, {{"sdpa_padding.q", q}, {"sdpa_padding.k", k}, {"sdpa_padding.v", v}}));
  }
  {
    MultiHeadAttention mha(6, 2, root.fork("mha.params"));
    Tensor q = rand_leaf({4, 6}, root.fork("mha.q"));
    Tensor kv = rand_leaf({5, 6}, root.fork("mha.kv"));
    Tensor r = rand_leaf({4, 6}, root.fork("mha.r"));
    r.set_requires_grad(false);
    NamedParams leaves{{"multi_head.q", q}, {"multi_head.kv", kv}};
    mha.collect(leaves, "multi_head");
    auto fn = [&] { return readout(mha.forward(q, kv, kv, AttentionMask::none()), r); };
    report.merge(gradcheck(fn, leaves));
  }
  {
    FeedForward ffn(5, 8, root.fork("ffn.params"));
    Tensor x = rand_leaf({3, 5}, root.fork("ffn.x"));
    Tensor r = rand_leaf({3, 5}, root.fork("ffn.r"));
    r.set_requires_grad(false);
    NamedParams leaves{{"feed_forward.x", x}};
    ffn.collect(leaves, "feed_forward");
    auto fn = [&] { return readout(ffn.forward(x), r); };
    report.merge(gradcheck(fn, leaves));
  }
  {
    LayerNorm norm(5);
    FeedForward ffn(5, 8, root.fork("sublayer.params"));
    Tensor x = rand_leaf({3, 5}, root.fork("sublayer.x"));
    Tensor r = rand_leaf({3, 5}, root.fork("sublayer.r"));
    r.set_requires_grad(false);
    NamedParams leaves{{"sublayer.x", x}};
    ffn.collect(leaves, "sublayer.ffn");
    norm.collect(leaves, "sublayer.norm");
    auto fn = [&] {
      Rng drop(seed + 5);
      RunState rs = RunState::train(0.25, &drop);
      return readout(
          sublayer(x, [&](const Tensor& in) { return ffn.forward(in); }, norm, rs), r);
    };
    report.merge(gradcheck(fn, leaves));
  }
  return report;
}

GradCheckReport gradcheck_tct(uint64_t seed) {
  Rng root(seed);
  GradCheckReport report;

  TctBlock block(8, 2, 16, root.fork("block.params"));
  Tensor target = rand_leaf({4, 8}, root.fork("block.target"));
  Tensor source = rand_leaf({6, 8}, root.fork("block.source"));
  Tensor r = rand_leaf({4, 8}, root.fork("block.r"));
  r.set_requires_grad(false);
  NamedParams leaves{{"tct.target", target}, {"tct.source", source}};
  block.collect(leaves, "tct");
  AttentionMask source_mask = AttentionMask::padding({0, 0, 0, 0, 1, 1});
  auto fn = [&] {
    auto out =
        block.forward(target, source, AttentionMask::causal(), source_mask, RunState::eval());
    return readout(out.out, r);
  };
  report.merge(gradcheck(fn, leaves));
  return report;
}

GradCheckReport gradcheck_model(uint64_t seed) {
  Rng root(seed);
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.heads = 2;
  cfg.tct_blocks = 1;
  cfg.decoder_layers = 1;
  cfg.autoencoder_layers = 1;
  cfg.vocab_size = 12;
  cfg.visual_dim = 5;
  cfg.audio_dim = 4;
  MtnTct model(cfg, root.fork("model"));

  DialogueExample ex;
  ex.id = "gradcheck";
  ex.history = {{4, 5, 2}, {6, 2}};
  ex.question = {7, 8, 9, 2};
  ex.caption = {10, 4, 6, 2};
  ex.summary = {5, 11, 2};
  ex.answer = {9, 10, 4, 2};
  Rng feat = root.fork("features");
  ex.visual = rand_leaf({6, 5}, feat.fork("visual"));
  ex.audio = rand_leaf({3, 4}, feat.fork("audio"));
  ex.visual.set_requires_grad(false);
  ex.audio.set_requires_grad(false);

  NamedParams leaves = model.named_parameters();
  auto fn = [&] {
    return model.composite_loss(ex, 1.0, 1.0, RunState::eval()).total;
  };
  GradCheckReport report;
  // The composite graph is deep enough that h=1e-5 sits at the roundoff
  // floor for near-zero gradients (the noise-only audio path); a wider
  // step keeps the differencing signal above it.
  report.merge(gradcheck(fn, leaves, 1e-4));
  return report;
}

}  // namespace tct
