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

#include <span>
#include <vector>

#include "tct/rng.hpp"
#include "tct/tape.hpp"
#include "tct/tensor.hpp"

namespace tct {

// Differentiable primitives. Every function runs the forward computation
// eagerly, verifies the result is finite, and records a backward rule on
// the active Tape when any input requires a gradient. Gradients
// accumulate (+=) across fan-out.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
// [n,d] plus a length-d vector broadcast over rows.
Tensor add_rowwise(const Tensor& m, const Tensor& v);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Row-wise softmax with max-subtraction. -inf logits map to exactly 0.
Tensor softmax(const Tensor& x);
Tensor relu(const Tensor& x);

// Row-wise normalization to mean 0 / variance 1 (within eps), then
// per-feature gain and bias. gain/bias have length cols(x).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-9);

// Inverted dropout: survivors scaled by 1/(1-p) at training time so that
// evaluation is the identity (the input handle is returned untouched).
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

// axis 0 stacks rows (equal cols), axis 1 joins columns (equal rows).
Tensor concat(std::span<const Tensor> xs, int axis);

Tensor gather_rows(const Tensor& x, const std::vector<Index>& indices);
// gather_rows with vocabulary-range checking on the ids.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

// Mean negative log-likelihood of targets under row-wise softmax(logits),
// averaged over positions whose target differs from pad_id.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets, int pad_id);

// Masked mean absolute error; mask entries are per row, nonzero = keep.
Tensor l1_loss(const Tensor& pred, const Tensor& target, const std::vector<uint8_t>& keep);
// Masked mean of (1 - cosine similarity) per row.
Tensor cosine_similarity_loss(const Tensor& pred, const Tensor& target,
                              const std::vector<uint8_t>& keep);

Tensor sum(const Tensor& x);
// Same values, no gradient history.
Tensor detach(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }

}  // namespace tct
