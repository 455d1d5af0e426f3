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

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tct {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatches; the message names both offending shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Violated operation precondition (non-scalar backward, empty stack, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class VocabError : public Error {
 public:
  using Error::Error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced by a forward op. Never silent.
class NumericsError : public Error {
 public:
  using Error::Error;
};

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Vec = Eigen::VectorXd;
using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatRM>;
using ConstMatMap = Eigen::Map<const MatRM>;

Index numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorNode {
  Shape shape;
  Vec value;  // flat, row-major
  Vec grad;   // empty until first accumulation
  bool requires_grad = false;
  std::string name;
};

// Value-semantics handle to a graph node. Copying a Tensor aliases the
// underlying storage; all computation state lives in the shared node.
// Rank 0 (scalar), 1 (vector) and 2 (matrix) are supported; a rank-1
// tensor of n elements is viewed as a 1-by-n matrix where a 2-D view is
// needed. Tensors are safe to move between threads; graph recording is
// confined to the thread owning the active Tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor constant(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from(Shape shape, std::vector<double> data);
  static Tensor from_matrix(const MatRM& m);
  // Leaf parameter: requires_grad, named. Contents start at zero.
  static Tensor param(Shape shape, std::string name);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Index size() const { return node_->value.size(); }
  Index rank() const { return static_cast<Index>(node_->shape.size()); }
  // 2-D view extents (rank 0 -> 1x1, rank 1 -> 1xn).
  Index rows() const;
  Index cols() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  const std::string& name() const { return node_->name; }
  void set_name(std::string name) { node_->name = std::move(name); }

  const Vec& value() const { return node_->value; }
  Vec& value() { return node_->value; }
  double item() const;

  bool has_grad() const { return node_->grad.size() > 0; }
  const Vec& grad() const;
  // Gradient state lives in the shared node, so these act through a
  // const handle.
  void zero_grad() const;
  // Accumulates into grad, allocating zeros on first use.
  void add_grad(const Vec& g) const;
  void add_grad_mat(const MatRM& g) const;

  ConstMatMap mat() const { return ConstMatMap(node_->value.data(), rows(), cols()); }
  MatMap mat_mut() { return MatMap(node_->value.data(), rows(), cols()); }
  ConstMatMap grad_mat() const { return ConstMatMap(node_->grad.data(), rows(), cols()); }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }
  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<TensorNode> node_;

  friend Tensor make_tensor(Shape shape, Vec value, bool requires_grad);
};

// Raw node factory used by op implementations.
Tensor make_tensor(Shape shape, Vec value, bool requires_grad);

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

}  // namespace tct
