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

#include "tct/tensor.hpp"

#include <sstream>

namespace tct {

Index numel(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor make_tensor(Shape shape, Vec value, bool requires_grad) {
  if (numel(shape) != value.size()) {
    throw ShapeError("tensor data of length " + std::to_string(value.size()) +
                     " does not fill shape " + shape_str(shape));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Index n = numel(shape);
  return make_tensor(std::move(shape), Vec::Zero(n), requires_grad);
}

Tensor Tensor::constant(Shape shape, double value) {
  Index n = numel(shape);
  return make_tensor(std::move(shape), Vec::Constant(n, value), false);
}

Tensor Tensor::scalar(double value) { return constant({}, value); }

Tensor Tensor::from(Shape shape, std::vector<double> data) {
  Vec v = Eigen::Map<const Vec>(data.data(), static_cast<Index>(data.size()));
  return make_tensor(std::move(shape), std::move(v), false);
}

Tensor Tensor::from_matrix(const MatRM& m) {
  Vec v = Eigen::Map<const Vec>(m.data(), m.size());
  return make_tensor({m.rows(), m.cols()}, std::move(v), false);
}

Tensor Tensor::param(Shape shape, std::string name) {
  Tensor t = zeros(std::move(shape), true);
  t.set_name(std::move(name));
  return t;
}

Index Tensor::rows() const {
  const Shape& s = node_->shape;
  return s.size() == 2 ? s[0] : 1;
}

Index Tensor::cols() const {
  const Shape& s = node_->shape;
  if (s.empty()) return 1;
  return s.back();
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() requires a size-1 tensor, got shape " + shape_str(shape()));
  }
  return node_->value[0];
}

const Vec& Tensor::grad() const {
  if (!has_grad()) {
    throw ContractError("tensor '" + node_->name + "' has no gradient");
  }
  return node_->grad;
}

void Tensor::zero_grad() const { node_->grad.resize(0); }

void Tensor::add_grad(const Vec& g) const {
  if (g.size() != node_->value.size()) {
    throw ShapeError("gradient of length " + std::to_string(g.size()) +
                     " does not match tensor shape " + shape_str(shape()));
  }
  if (!has_grad()) {
    node_->grad = g;
  } else {
    node_->grad += g;
  }
}

void Tensor::add_grad_mat(const MatRM& g) const {
  add_grad(Eigen::Map<const Vec>(g.data(), g.size()));
}

}  // namespace tct
