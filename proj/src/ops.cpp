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

#include "tct/ops.hpp"

#include <cmath>
#include <string>

namespace tct {
namespace {

bool any_requires_grad(std::span<const Tensor> xs) {
  for (const Tensor& x : xs) {
    if (x.requires_grad()) return true;
  }
  return false;
}

// Builds the result node, enforcing the finiteness invariant. Output
// participates in the graph only when a tape is active and some input
// needs a gradient.
Tensor finish(const char* op, Shape shape, Vec value, std::span<const Tensor> inputs) {
  if (!value.allFinite()) {
    throw NumericsError(std::string(op) + " produced non-finite values");
  }
  bool rg = Tape::active() != nullptr && any_requires_grad(inputs);
  return make_tensor(std::move(shape), std::move(value), rg);
}

Tensor finish(const char* op, Shape shape, Vec value, std::initializer_list<Tensor> inputs) {
  return finish(op, std::move(shape), std::move(value),
                std::span<const Tensor>(inputs.begin(), inputs.size()));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got shape " +
                     shape_str(t.shape()));
  }
}

Vec flat(const MatRM& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out = finish("add", a.shape(), a.value() + b.value(), {a, b});
  if (out.requires_grad()) {
    Tape::active()->record("add", {a, b}, out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) a.add_grad(out.grad());
      if (b.requires_grad()) b.add_grad(out.grad());
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out = finish("sub", a.shape(), a.value() - b.value(), {a, b});
  if (out.requires_grad()) {
    Tape::active()->record("sub", {a, b}, out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) a.add_grad(out.grad());
      if (b.requires_grad()) b.add_grad(-out.grad());
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out = finish("mul", a.shape(), (a.value().array() * b.value().array()).matrix(), {a, b});
  if (out.requires_grad()) {
    Tape::active()->record("mul", {a, b}, out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      if (a.requires_grad()) a.add_grad((out.grad().array() * b.value().array()).matrix());
      if (b.requires_grad()) b.add_grad((out.grad().array() * a.value().array()).matrix());
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = finish("scale", a.shape(), a.value() * c, {a});
  if (out.requires_grad()) {
    Tape::active()->record("scale", {a}, out, [a, c, out]() mutable {
      if (!out.has_grad()) return;
      a.add_grad(out.grad() * c);
    });
  }
  return out;
}

Tensor add_rowwise(const Tensor& m, const Tensor& v) {
  if (v.size() != m.cols()) {
    throw ShapeError("add_rowwise: row vector " + shape_str(v.shape()) +
                     " does not match matrix " + shape_str(m.shape()));
  }
  MatRM r = m.mat();
  r.rowwise() += v.value().transpose();
  Tensor out = finish("add_rowwise", m.shape(), flat(r), {m, v});
  if (out.requires_grad()) {
    Tape::active()->record("add_rowwise", {m, v}, out, [m, v, out]() mutable {
      if (!out.has_grad()) return;
      if (m.requires_grad()) m.add_grad(out.grad());
      if (v.requires_grad()) v.add_grad(out.grad_mat().colwise().sum().transpose());
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions of " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " disagree");
  }
  MatRM c = a.mat() * b.mat();
  Tensor out = finish("matmul", {a.rows(), b.cols()}, flat(c), {a, b});
  if (out.requires_grad()) {
    Tape::active()->record("matmul", {a, b}, out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      ConstMatMap g = out.grad_mat();
      if (a.requires_grad()) a.add_grad_mat(g * b.mat().transpose());
      if (b.requires_grad()) b.add_grad_mat(a.mat().transpose() * g);
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2("transpose", a);
  MatRM t = a.mat().transpose();
  Tensor out = finish("transpose", {a.cols(), a.rows()}, flat(t), {a});
  if (out.requires_grad()) {
    Tape::active()->record("transpose", {a}, out, [a, out]() mutable {
      if (!out.has_grad()) return;
      a.add_grad_mat(out.grad_mat().transpose());
    });
  }
  return out;
}

Tensor softmax(const Tensor& x) {
  MatRM y = x.mat();
  for (Index r = 0; r < y.rows(); ++r) {
    double m = y.row(r).maxCoeff();
    double total = 0.0;
    // Scalar std::exp underflows to exactly 0 for strongly masked
    // logits; vectorized exp leaves denormals behind.
    for (Index c = 0; c < y.cols(); ++c) {
      double e = std::exp(y(r, c) - m);
      y(r, c) = e;
      total += e;
    }
    y.row(r) /= total;
  }
  Tensor out = finish("softmax", x.shape(), flat(y), {x});
  if (out.requires_grad()) {
    Tape::active()->record("softmax", {x}, out, [x, out]() mutable {
      if (!out.has_grad()) return;
      ConstMatMap g = out.grad_mat();
      ConstMatMap y = out.mat();
      MatRM dx(g.rows(), g.cols());
      for (Index r = 0; r < g.rows(); ++r) {
        double dot = g.row(r).dot(y.row(r));
        dx.row(r) = (y.row(r).array() * (g.row(r).array() - dot)).matrix();
      }
      x.add_grad_mat(dx);
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = finish("relu", x.shape(), x.value().cwiseMax(0.0), {x});
  if (out.requires_grad()) {
    Tape::active()->record("relu", {x}, out, [x, out]() mutable {
      if (!out.has_grad()) return;
      x.add_grad(((x.value().array() > 0.0).cast<double>() * out.grad().array()).matrix());
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  Index d = x.cols();
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " +
                     shape_str(bias.shape()) + " do not match feature width of " +
                     shape_str(x.shape()));
  }
  ConstMatMap xm = x.mat();
  MatRM xhat(xm.rows(), d);
  Vec inv_std(xm.rows());
  for (Index r = 0; r < xm.rows(); ++r) {
    double mean = xm.row(r).mean();
    auto centered = xm.row(r).array() - mean;
    double var = centered.square().sum() / static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (centered * inv_std[r]).matrix();
  }
  MatRM y = xhat;
  y.array().rowwise() *= gain.value().transpose().array();
  y.rowwise() += bias.value().transpose();
  Tensor out = finish("layer_norm", x.shape(), flat(y), {x, gain, bias});
  if (out.requires_grad()) {
    Tape::active()->record(
        "layer_norm", {x, gain, bias}, out,
        [x, gain, bias, out, xhat = std::move(xhat), inv_std = std::move(inv_std), d]() mutable {
          if (!out.has_grad()) return;
          ConstMatMap g = out.grad_mat();
          if (gain.requires_grad()) {
            gain.add_grad((g.array() * xhat.array()).colwise().sum().transpose());
          }
          if (bias.requires_grad()) {
            bias.add_grad(g.colwise().sum().transpose());
          }
          if (x.requires_grad()) {
            MatRM dx(g.rows(), d);
            double n = static_cast<double>(d);
            for (Index r = 0; r < g.rows(); ++r) {
              auto dxhat = (g.row(r).array() * gain.value().transpose().array()).eval();
              double sum_dxhat = dxhat.sum();
              double sum_dxhat_xhat = (dxhat * xhat.row(r).array()).sum();
              dx.row(r) = (inv_std[r] / n *
                           (n * dxhat - sum_dxhat - xhat.row(r).array() * sum_dxhat_xhat))
                              .matrix();
            }
            x.add_grad_mat(dx);
          }
        });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ContractError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  Vec mask(x.size());
  double keep_scale = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.size(); ++i) {
    mask[i] = rng.uniform() >= p ? keep_scale : 0.0;
  }
  Tensor out = finish("dropout", x.shape(), (x.value().array() * mask.array()).matrix(), {x});
  if (out.requires_grad()) {
    Tape::active()->record("dropout", {x}, out, [x, out, mask = std::move(mask)]() mutable {
      if (!out.has_grad()) return;
      x.add_grad((out.grad().array() * mask.array()).matrix());
    });
  }
  return out;
}

Tensor concat(std::span<const Tensor> xs, int axis) {
  if (xs.empty()) throw ContractError("concat of zero tensors");
  if (axis != 0 && axis != 1) throw ContractError("concat axis must be 0 or 1");
  for (const Tensor& t : xs) require_rank2("concat", t);
  Index rows = 0, cols = 0;
  if (axis == 0) {
    cols = xs[0].cols();
    for (const Tensor& t : xs) {
      if (t.cols() != cols) {
        throw ShapeError("concat axis 0: " + shape_str(t.shape()) + " does not match width " +
                         std::to_string(cols));
      }
      rows += t.rows();
    }
  } else {
    rows = xs[0].rows();
    for (const Tensor& t : xs) {
      if (t.rows() != rows) {
        throw ShapeError("concat axis 1: " + shape_str(t.shape()) + " does not match height " +
                         std::to_string(rows));
      }
      cols += t.cols();
    }
  }
  MatRM c(rows, cols);
  Index off = 0;
  for (const Tensor& t : xs) {
    if (axis == 0) {
      c.middleRows(off, t.rows()) = t.mat();
      off += t.rows();
    } else {
      c.middleCols(off, t.cols()) = t.mat();
      off += t.cols();
    }
  }
  Tensor out = finish("concat", {rows, cols}, flat(c), xs);
  if (out.requires_grad()) {
    std::vector<Tensor> inputs(xs.begin(), xs.end());
    Tape::active()->record("concat", inputs, out, [inputs, out, axis]() mutable {
      if (!out.has_grad()) return;
      ConstMatMap g = out.grad_mat();
      Index off = 0;
      for (Tensor& t : inputs) {
        if (axis == 0) {
          if (t.requires_grad()) t.add_grad_mat(g.middleRows(off, t.rows()));
          off += t.rows();
        } else {
          if (t.requires_grad()) t.add_grad_mat(g.middleCols(off, t.cols()));
          off += t.cols();
        }
      }
    });
  }
  return out;
}

namespace {

Tensor gather_rows_impl(const char* op, const Tensor& x, std::vector<Index> idx) {
  require_rank2(op, x);
  MatRM g(static_cast<Index>(idx.size()), x.cols());
  for (size_t k = 0; k < idx.size(); ++k) {
    g.row(static_cast<Index>(k)) = x.mat().row(idx[k]);
  }
  Tensor out = finish(op, {static_cast<Index>(idx.size()), x.cols()}, flat(g), {x});
  if (out.requires_grad()) {
    Tape::active()->record(op, {x}, out, [x, out, idx = std::move(idx)]() mutable {
      if (!out.has_grad()) return;
      ConstMatMap g = out.grad_mat();
      MatRM dx = MatRM::Zero(x.rows(), x.cols());
      for (size_t k = 0; k < idx.size(); ++k) {
        dx.row(idx[k]) += g.row(static_cast<Index>(k));
      }
      x.add_grad_mat(dx);
    });
  }
  return out;
}

}  // namespace

Tensor gather_rows(const Tensor& x, const std::vector<Index>& indices) {
  for (Index i : indices) {
    if (i < 0 || i >= x.rows()) {
      throw ContractError("gather_rows: index " + std::to_string(i) + " outside " +
                          shape_str(x.shape()));
    }
  }
  return gather_rows_impl("gather_rows", x, indices);
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  std::vector<Index> idx(ids.size());
  for (size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] < 0 || ids[k] >= table.rows()) {
      throw VocabError("token id " + std::to_string(ids[k]) + " outside vocabulary of size " +
                       std::to_string(table.rows()));
    }
    idx[k] = ids[k];
  }
  return gather_rows_impl("embedding_lookup", table, std::move(idx));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets, int pad_id) {
  require_rank2("cross_entropy", logits);
  if (static_cast<Index>(targets.size()) != logits.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for logits " + shape_str(logits.shape()));
  }
  Index vocab = logits.cols();
  Index count = 0;
  double nll = 0.0;
  ConstMatMap lm = logits.mat();
  for (Index r = 0; r < lm.rows(); ++r) {
    int t = targets[static_cast<size_t>(r)];
    if (t == pad_id) continue;
    if (t < 0 || t >= vocab) {
      throw VocabError("cross_entropy: target id " + std::to_string(t) +
                       " outside vocabulary of size " + std::to_string(vocab));
    }
    double m = lm.row(r).maxCoeff();
    double lse = m + std::log((lm.row(r).array() - m).exp().sum());
    nll += lse - lm(r, t);
    ++count;
  }
  if (count == 0) {
    throw ContractError("cross_entropy: every position is padding");
  }
  Vec v(1);
  v[0] = nll / static_cast<double>(count);
  Tensor out = finish("cross_entropy", {}, std::move(v), {logits});
  if (out.requires_grad()) {
    Tape::active()->record(
        "cross_entropy", {logits}, out, [logits, out, targets, pad_id, count]() mutable {
          if (!out.has_grad()) return;
          double g = out.grad()[0] / static_cast<double>(count);
          ConstMatMap lm = logits.mat();
          MatRM dx = MatRM::Zero(lm.rows(), lm.cols());
          for (Index r = 0; r < lm.rows(); ++r) {
            int t = targets[static_cast<size_t>(r)];
            if (t == pad_id) continue;
            double m = lm.row(r).maxCoeff();
            auto e = (lm.row(r).array() - m).exp().eval();
            dx.row(r) = (e / e.sum()) * g;
            dx(r, t) -= g;
          }
          logits.add_grad_mat(dx);
        });
  }
  return out;
}

namespace {

Index masked_count(const char* op, const Tensor& pred, const Tensor& target,
                   const std::vector<uint8_t>& keep) {
  require_same_shape(op, pred, target);
  if (static_cast<Index>(keep.size()) != pred.rows()) {
    throw ShapeError(std::string(op) + ": mask of length " + std::to_string(keep.size()) +
                     " for " + shape_str(pred.shape()));
  }
  Index count = 0;
  for (uint8_t k : keep) count += k ? 1 : 0;
  if (count == 0) throw ContractError(std::string(op) + ": every position is masked out");
  return count;
}

}  // namespace

Tensor l1_loss(const Tensor& pred, const Tensor& target, const std::vector<uint8_t>& keep) {
  Index count = masked_count("l1_loss", pred, target, keep);
  double denom = static_cast<double>(count) * static_cast<double>(pred.cols());
  ConstMatMap pm = pred.mat();
  ConstMatMap tm = target.mat();
  double total = 0.0;
  for (Index r = 0; r < pm.rows(); ++r) {
    if (!keep[static_cast<size_t>(r)]) continue;
    total += (pm.row(r) - tm.row(r)).array().abs().sum();
  }
  Vec v(1);
  v[0] = total / denom;
  Tensor out = finish("l1_loss", {}, std::move(v), {pred, target});
  if (out.requires_grad()) {
    Tape::active()->record("l1_loss", {pred, target}, out,
                           [pred, target, out, keep, denom]() mutable {
                             if (!out.has_grad()) return;
                             double g = out.grad()[0] / denom;
                             ConstMatMap pm = pred.mat();
                             ConstMatMap tm = target.mat();
                             MatRM d = MatRM::Zero(pm.rows(), pm.cols());
                             for (Index r = 0; r < pm.rows(); ++r) {
                               if (!keep[static_cast<size_t>(r)]) continue;
                               d.row(r) = ((pm.row(r) - tm.row(r)).array().sign() * g).matrix();
                             }
                             if (pred.requires_grad()) pred.add_grad_mat(d);
                             if (target.requires_grad()) target.add_grad_mat(-d);
                           });
  }
  return out;
}

Tensor cosine_similarity_loss(const Tensor& pred, const Tensor& target,
                              const std::vector<uint8_t>& keep) {
  Index count = masked_count("cosine_similarity_loss", pred, target, keep);
  ConstMatMap pm = pred.mat();
  ConstMatMap tm = target.mat();
  double total = 0.0;
  for (Index r = 0; r < pm.rows(); ++r) {
    if (!keep[static_cast<size_t>(r)]) continue;
    double np = pm.row(r).norm();
    double nt = tm.row(r).norm();
    double cos = (np == 0.0 || nt == 0.0) ? 0.0 : pm.row(r).dot(tm.row(r)) / (np * nt);
    total += 1.0 - cos;
  }
  Vec v(1);
  v[0] = total / static_cast<double>(count);
  Tensor out = finish("cosine_similarity_loss", {}, std::move(v), {pred, target});
  if (out.requires_grad()) {
    Tape::active()->record(
        "cosine_similarity_loss", {pred, target}, out, [pred, target, out, keep, count]() mutable {
          if (!out.has_grad()) return;
          double g = out.grad()[0] / static_cast<double>(count);
          ConstMatMap pm = pred.mat();
          ConstMatMap tm = target.mat();
          MatRM dp = MatRM::Zero(pm.rows(), pm.cols());
          MatRM dt = MatRM::Zero(pm.rows(), pm.cols());
          for (Index r = 0; r < pm.rows(); ++r) {
            if (!keep[static_cast<size_t>(r)]) continue;
            double np = pm.row(r).norm();
            double nt = tm.row(r).norm();
            if (np == 0.0 || nt == 0.0) continue;  // cos pinned to 0, flat
            double dot = pm.row(r).dot(tm.row(r));
            dp.row(r) = -g * (tm.row(r) / (np * nt) - pm.row(r) * (dot / (np * np * np * nt)));
            dt.row(r) = -g * (pm.row(r) / (np * nt) - tm.row(r) * (dot / (nt * nt * nt * np)));
          }
          if (pred.requires_grad()) pred.add_grad_mat(dp);
          if (target.requires_grad()) target.add_grad_mat(dt);
        });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  Vec v(1);
  v[0] = x.value().sum();
  Tensor out = finish("sum", {}, std::move(v), {x});
  if (out.requires_grad()) {
    Tape::active()->record("sum", {x}, out, [x, out]() mutable {
      if (!out.has_grad()) return;
      x.add_grad(Vec::Constant(x.size(), out.grad()[0]));
    });
  }
  return out;
}

Tensor detach(const Tensor& x) { return make_tensor(x.shape(), x.value(), false); }

}  // namespace tct
