// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mcm {

class Tensor;

namespace detail {

// One recorded forward op. Parents are held by value (shared impls) so the
// graph keeps every intermediate alive until backward releases it.
struct Node {
  std::string op;
  std::vector<Tensor> parents;
  std::function<void(const Tensor& out)> backward;
};

struct TensorImpl {
  std::vector<std::int64_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // creator op; null for leaves and after backward
};

}  // namespace detail

// Shaped, row-major, 64-bit dense array participating in reverse-mode
// differentiation. Copies are shallow (shared storage).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::int64_t> shape, double value, bool requires_grad = false);
  static Tensor from_data(std::vector<std::int64_t> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::int64_t>& shape() const { return impl_->shape; }
  std::int64_t dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::vector<double>& data() { return impl_->data; }
  const std::vector<double>& data() const { return impl_->data; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::vector<double>& grad();              // allocates zeros on first use
  const std::vector<double>& grad() const;  // throws if absent
  void zero_grad();

  // Deep copy of the values; no graph, requires_grad off.
  Tensor detached_copy() const;

  // Reverse-mode pass from a scalar loss. Fills grad on every reachable
  // requires_grad leaf and releases the graph; a second call without a new
  // forward throws.
  void backward();

  bool has_node() const { return impl_->node != nullptr; }
  void set_node(std::shared_ptr<detail::Node> n) { impl_->node = std::move(n); }
  const std::shared_ptr<detail::Node>& node() const { return impl_->node; }
  detail::TensorImpl* impl() const { return impl_.get(); }

  std::string shape_str() const;

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Thread-local switch recording whether new ops are taped. Evaluation and
// teacher passes run inside a NoGradGuard so no graph or buffers build up.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline bool taping(const Tensor& t) { return grad_enabled() && t.requires_grad(); }

std::int64_t shape_numel(const std::vector<std::int64_t>& shape);
std::string shape_to_string(const std::vector<std::int64_t>& shape);

}  // namespace mcm
