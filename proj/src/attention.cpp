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

#include "tct/attention.hpp"

#include <cmath>

namespace tct {

bool AttentionMask::blocks(Index q, Index k) const {
  if (is_causal() && k > q) return true;
  if (has_padding() && k < static_cast<Index>(key_padding.size()) &&
      key_padding[static_cast<size_t>(k)]) {
    return true;
  }
  return false;
}

Tensor AttentionMask::additive(Index n_query, Index n_key) const {
  if (has_padding() && static_cast<Index>(key_padding.size()) != n_key) {
    throw ShapeError("attention mask covers " + std::to_string(key_padding.size()) +
                     " keys, sequence has " + std::to_string(n_key));
  }
  MatRM m = MatRM::Zero(n_query, n_key);
  for (Index q = 0; q < n_query; ++q) {
    bool any_open = false;
    for (Index k = 0; k < n_key; ++k) {
      if (blocks(q, k)) {
        m(q, k) = kMaskLogit;
      } else {
        any_open = true;
      }
    }
    if (!any_open) {
      throw ContractError("attention: every key masked for query position " + std::to_string(q));
    }
  }
  return Tensor::from_matrix(m);
}

Tensor scaled_dot_attention(const Tensor& query, const Tensor& key, const Tensor& value,
                            const AttentionMask& mask) {
  if (query.cols() != key.cols()) {
    throw ShapeError("attention: query " + shape_str(query.shape()) + " and key " +
                     shape_str(key.shape()) + " disagree on d_k");
  }
  if (key.rows() != value.rows()) {
    throw ShapeError("attention: key " + shape_str(key.shape()) + " and value " +
                     shape_str(value.shape()) + " disagree on sequence length");
  }
  Tensor logits = scale(matmul(query, transpose(key)), 1.0 / std::sqrt(double(query.cols())));
  if (mask.kind != MaskKind::None) {
    logits = add(logits, mask.additive(query.rows(), key.rows()));
  }
  return matmul(softmax(logits), value);
}

Tensor xavier_uniform(Shape shape, Rng rng) {
  Index fan_in = shape.size() == 2 ? shape[0] : 1;
  Index fan_out = shape.empty() ? 1 : shape.back();
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Index n = numel(shape);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(-limit, limit);
  Tensor t = make_tensor(std::move(shape), std::move(v), true);
  return t;
}

MultiHeadAttention::MultiHeadAttention(Index d, int h, Rng rng) : heads(h), d_model(d) {
  if (h < 1 || d % h != 0) {
    throw ConfigError("model dimension " + std::to_string(d) + " not divisible by " +
                      std::to_string(h) + " heads");
  }
  d_head = d / h;
  for (int i = 0; i < h; ++i) {
    std::string n = std::to_string(i);
    w_query.push_back(xavier_uniform({d, d_head}, rng.fork("wq" + n)));
    w_key.push_back(xavier_uniform({d, d_head}, rng.fork("wk" + n)));
    w_value.push_back(xavier_uniform({d, d_head}, rng.fork("wv" + n)));
  }
  w_out = xavier_uniform({d, d}, rng.fork("wo"));
}

Tensor MultiHeadAttention::forward(const Tensor& query, const Tensor& key, const Tensor& value,
                                   const AttentionMask& mask) const {
  if (query.cols() != d_model || key.cols() != d_model || value.cols() != d_model) {
    throw ShapeError("multi_head: inputs " + shape_str(query.shape()) + "/" +
                     shape_str(key.shape()) + "/" + shape_str(value.shape()) +
                     " do not match model dimension " + std::to_string(d_model));
  }
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));
  Tensor mask_logits;
  if (mask.kind != MaskKind::None) mask_logits = mask.additive(query.rows(), key.rows());
  std::vector<Tensor> head_out;
  head_out.reserve(static_cast<size_t>(heads));
  for (int i = 0; i < heads; ++i) {
    Tensor q = matmul(query, w_query[static_cast<size_t>(i)]);
    Tensor k = matmul(key, w_key[static_cast<size_t>(i)]);
    Tensor v = matmul(value, w_value[static_cast<size_t>(i)]);
    Tensor logits = scale(matmul(q, transpose(k)), inv_sqrt);
    if (mask_logits.defined()) logits = add(logits, mask_logits);
    head_out.push_back(matmul(softmax(logits), v));
  }
  Tensor merged = heads == 1 ? head_out[0] : concat(head_out, 1);
  return matmul(merged, w_out);
}

void MultiHeadAttention::collect(NamedParams& out, const std::string& prefix) const {
  for (int i = 0; i < heads; ++i) {
    std::string n = std::to_string(i);
    out.emplace_back(prefix + ".wq" + n, w_query[static_cast<size_t>(i)]);
    out.emplace_back(prefix + ".wk" + n, w_key[static_cast<size_t>(i)]);
    out.emplace_back(prefix + ".wv" + n, w_value[static_cast<size_t>(i)]);
  }
  out.emplace_back(prefix + ".wo", w_out);
}

FeedForward::FeedForward(Index d, Index d_hidden, Rng rng) {
  w1 = xavier_uniform({d, d_hidden}, rng.fork("w1"));
  b1 = Tensor::zeros({d_hidden}, true);
  w2 = xavier_uniform({d_hidden, d}, rng.fork("w2"));
  b2 = Tensor::zeros({d}, true);
}

Tensor FeedForward::forward(const Tensor& x) const {
  return add_rowwise(matmul(relu(add_rowwise(matmul(x, w1), b1)), w2), b2);
}

void FeedForward::collect(NamedParams& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".w1", w1);
  out.emplace_back(prefix + ".b1", b1);
  out.emplace_back(prefix + ".w2", w2);
  out.emplace_back(prefix + ".b2", b2);
}

LayerNorm::LayerNorm(Index d) {
  gain = make_tensor({d}, Vec::Ones(d), true);
  bias = Tensor::zeros({d}, true);
}

void LayerNorm::collect(NamedParams& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".gain", gain);
  out.emplace_back(prefix + ".bias", bias);
}

Tensor sublayer(const Tensor& x, const std::function<Tensor(const Tensor&)>& f,
                const LayerNorm& norm, const RunState& rs) {
  Tensor fx = f(x);
  if (fx.shape() != x.shape()) {
    throw ContractError("sublayer: inner function changed shape " + shape_str(x.shape()) +
                        " -> " + shape_str(fx.shape()));
  }
  if (rs.training && rs.dropout > 0.0) {
    fx = dropout(fx, rs.dropout, rs.training, *rs.rng);
  }
  return norm.forward(add(x, fx));
}

Tensor positional_encoding_slice(Index offset, Index length, Index dim) {
  if (length < 1) throw ContractError("positional encoding length must be >= 1");
  MatRM pe(length, dim);
  for (Index t = 0; t < length; ++t) {
    double pos = static_cast<double>(offset + t);
    for (Index i = 0; i < dim; i += 2) {
      double rate = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
      pe(t, i) = std::sin(pos * rate);
      if (i + 1 < dim) pe(t, i + 1) = std::cos(pos * rate);
    }
  }
  return Tensor::from_matrix(pe);
}

Tensor positional_encoding(Index length, Index dim) {
  return positional_encoding_slice(0, length, dim);
}

}  // namespace tct
