// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "mcm/errors.hpp"

namespace mcm {

namespace {
thread_local bool t_grad_enabled = true;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape, bool requires_grad) {
  for (std::int64_t d : shape)
    if (d <= 0) throw ShapeError("tensor: non-positive dimension in " + shape_to_string(shape));
  Tensor t;
  t.impl_ = std::make_shared<detail::TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data.assign(static_cast<std::size_t>(shape_numel(t.impl_->shape)), 0.0);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.data().begin(), t.data().end(), value);
  return t;
}

Tensor Tensor::from_data(std::vector<std::int64_t> shape, std::vector<double> data,
                         bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<detail::TensorImpl>();
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_string(shape));
  for (std::int64_t d : shape)
    if (d <= 0) throw ShapeError("tensor: non-positive dimension in " + shape_to_string(shape));
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item: tensor " + shape_str() + " is not a scalar");
  return impl_->data[0];
}

std::vector<double>& Tensor::grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (impl_->grad.empty()) throw NumericError("grad: no gradient present; run backward first");
  return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::detached_copy() const {
  return from_data(impl_->shape, impl_->data, /*requires_grad=*/false);
}

std::string Tensor::shape_str() const { return shape_to_string(impl_->shape); }

void Tensor::backward() {
  if (numel() != 1) throw ShapeError("backward: loss " + shape_str() + " is not a scalar");
  if (!impl_->node)
    throw NumericError("backward: no graph attached to the loss (empty graph or already released)");

  // Iterative post-order over creator nodes; reversed it is a valid
  // topological order for the pull-based gradient sweep.
  std::vector<Tensor> order;
  std::unordered_set<detail::TensorImpl*> seen;
  struct Frame {
    Tensor t;
    std::size_t next_parent = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({*this});
  seen.insert(impl_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = f.t.node();
    if (node && f.next_parent < node->parents.size()) {
      Tensor p = node->parents[f.next_parent++];
      if (p.node() && !seen.count(p.impl())) {
        seen.insert(p.impl());
        stack.push_back({p});
      }
    } else {
      order.push_back(f.t);
      stack.pop_back();
    }
  }

  grad().assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto node = it->node();
    node->backward(*it);
  }
  // Release the tape; gradients stay on the leaves.
  for (auto& t : order) t.set_node(nullptr);
}

}  // namespace mcm
