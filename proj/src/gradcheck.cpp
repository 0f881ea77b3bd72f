// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mcm/errors.hpp"
#include "mcm/ops.hpp"

namespace mcm {

double grad_check(const ScalarFn& fn, const Tensor& input, double h) {
  Tensor x = input.detached_copy();
  x.set_requires_grad(true);
  Tensor loss = fn(x);
  if (loss.numel() != 1) throw ShapeError("grad_check: closure did not return a scalar");
  loss.backward();
  std::vector<double> analytic = x.has_grad() ? x.grad() : std::vector<double>(x.data().size(), 0.0);

  double max_err = 0.0;
  NoGradGuard ng;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double orig = x.data()[i];
    x.data()[i] = orig + h;
    const double fp = fn(x).item();
    x.data()[i] = orig - h;
    const double fm = fn(x).item();
    x.data()[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(fd), 1e-8});
    max_err = std::max(max_err, std::fabs(analytic[i] - fd) / denom);
  }
  return max_err;
}

namespace {

Tensor rand_tensor(Rng& rng, std::vector<std::int64_t> shape, double scl = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = rng.normal(0.0, scl);
  return t;
}

// Random linear readout so every output element influences the loss.
ScalarFn weighted(std::function<Tensor(const Tensor&)> op, Tensor w) {
  return [op = std::move(op), w = std::move(w)](const Tensor& x) {
    return ops::sum_all(ops::mul(op(x), w));
  };
}

}  // namespace

const std::vector<OpCheck>& op_checks() {
  static const std::vector<OpCheck> checks = {
      {"matmul.lhs",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {5, 3});
         Tensor w = rand_tensor(rng, {4, 3});
         return std::pair(rand_tensor(rng, {4, 5}),
                          weighted([b](const Tensor& x) { return ops::matmul(x, b); }, w));
       }},
      {"matmul.rhs",
       [](Rng& rng) {
         Tensor a = rand_tensor(rng, {4, 5});
         Tensor w = rand_tensor(rng, {4, 3});
         return std::pair(rand_tensor(rng, {5, 3}),
                          weighted([a](const Tensor& x) { return ops::matmul(a, x); }, w));
       }},
      {"bmm.lhs",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {2, 4, 3});
         Tensor w = rand_tensor(rng, {2, 5, 3});
         return std::pair(rand_tensor(rng, {2, 5, 4}),
                          weighted([b](const Tensor& x) { return ops::bmm(x, b); }, w));
       }},
      {"bmm.rhs",
       [](Rng& rng) {
         Tensor a = rand_tensor(rng, {2, 5, 4});
         Tensor w = rand_tensor(rng, {2, 5, 3});
         return std::pair(rand_tensor(rng, {2, 4, 3}),
                          weighted([a](const Tensor& x) { return ops::bmm(a, x); }, w));
       }},
      {"transpose",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {5, 4});
         return std::pair(rand_tensor(rng, {4, 5}),
                          weighted([](const Tensor& x) { return ops::transpose(x); }, w));
       }},
      {"transpose.batched",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {2, 5, 4});
         return std::pair(rand_tensor(rng, {2, 4, 5}),
                          weighted([](const Tensor& x) { return ops::transpose(x); }, w));
       }},
      {"add",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {3, 4});
         Tensor w = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          weighted([b](const Tensor& x) { return ops::add(x, b); }, w));
       }},
      {"sub",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {3, 4});
         Tensor w = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          weighted([b](const Tensor& x) { return ops::sub(b, x); }, w));
       }},
      {"mul",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {3, 4});
         Tensor w = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          weighted([b](const Tensor& x) { return ops::mul(x, b); }, w));
       }},
      {"scale",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          weighted([](const Tensor& x) { return ops::scale(x, -1.7); }, w));
       }},
      {"add_bias.input",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {4});
         Tensor w = rand_tensor(rng, {2, 3, 4});
         return std::pair(rand_tensor(rng, {2, 3, 4}),
                          weighted([b](const Tensor& x) { return ops::add_bias(x, b); }, w));
       }},
      {"add_bias.bias",
       [](Rng& rng) {
         Tensor a = rand_tensor(rng, {2, 3, 4});
         Tensor w = rand_tensor(rng, {2, 3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          weighted([a](const Tensor& x) { return ops::add_bias(a, x); }, w));
       }},
      {"concat",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {3, 2});
         Tensor w = rand_tensor(rng, {3, 6});
         return std::pair(rand_tensor(rng, {3, 4}), weighted(
                              [b](const Tensor& x) {
                                return ops::concat({x, b}, 1);
                              },
                              w));
       }},
      {"slice",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {3, 2});
         return std::pair(rand_tensor(rng, {3, 5}),
                          weighted([](const Tensor& x) { return ops::slice(x, 1, 1, 2); }, w));
       }},
      {"reshape",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {12});
         return std::pair(rand_tensor(rng, {3, 4}),
                          weighted([](const Tensor& x) { return ops::reshape(x, {12}); }, w));
       }},
      {"softmax",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {3, 5});
         return std::pair(rand_tensor(rng, {3, 5}),
                          weighted([](const Tensor& x) { return ops::softmax(x); }, w));
       }},
      {"layernorm",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {3, 6});
         return std::pair(rand_tensor(rng, {3, 6}),
                          weighted([](const Tensor& x) { return ops::layernorm(x); }, w));
       }},
      {"scale_shift.input",
       [](Rng& rng) {
         Tensor g = rand_tensor(rng, {4}), b = rand_tensor(rng, {4});
         Tensor w = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          weighted([g, b](const Tensor& x) { return ops::scale_shift(x, g, b); }, w));
       }},
      {"scale_shift.gamma",
       [](Rng& rng) {
         Tensor a = rand_tensor(rng, {3, 4}), b = rand_tensor(rng, {4});
         Tensor w = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {4}),
                          weighted([a, b](const Tensor& x) { return ops::scale_shift(a, x, b); }, w));
       }},
      {"scale_shift.beta",
       [](Rng& rng) {
         Tensor a = rand_tensor(rng, {3, 4}), g = rand_tensor(rng, {4});
         Tensor w = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {4}),
                          weighted([a, g](const Tensor& x) { return ops::scale_shift(a, g, x); }, w));
       }},
      {"gelu",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {4, 4});
         return std::pair(rand_tensor(rng, {4, 4}),
                          weighted([](const Tensor& x) { return ops::gelu(x); }, w));
       }},
      {"sigmoid",
       [](Rng& rng) {
         Tensor w = rand_tensor(rng, {4, 4});
         return std::pair(rand_tensor(rng, {4, 4}),
                          weighted([](const Tensor& x) { return ops::sigmoid(x); }, w));
       }},
      {"sum_all",
       [](Rng& rng) {
         return std::pair(rand_tensor(rng, {3, 4}),
                          ScalarFn([](const Tensor& x) { return ops::sum_all(x); }));
       }},
      {"mean_all",
       [](Rng& rng) {
         return std::pair(rand_tensor(rng, {3, 4}),
                          ScalarFn([](const Tensor& x) { return ops::mean_all(x); }));
       }},
      {"mse.lhs",
       [](Rng& rng) {
         Tensor b = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          ScalarFn([b](const Tensor& x) { return ops::mse(x, b); }));
       }},
      {"mse.rhs",
       [](Rng& rng) {
         Tensor a = rand_tensor(rng, {3, 4});
         return std::pair(rand_tensor(rng, {3, 4}),
                          ScalarFn([a](const Tensor& x) { return ops::mse(a, x); }));
       }},
      {"bce",
       [](Rng& rng) {
         Tensor t = Tensor::zeros({2, 4});
         for (auto& v : t.data()) v = rng.uniform();
         return std::pair(rand_tensor(rng, {2, 4}), ScalarFn([t](const Tensor& x) {
                            return ops::bce(ops::sigmoid(x), t);
                          }));
       }},
      {"embedding",
       [](Rng& rng) {
         std::vector<std::vector<std::int64_t>> ids = {{0, 2, 1}, {2, 2, 3}};
         Tensor w = rand_tensor(rng, {2, 3, 4});
         return std::pair(rand_tensor(rng, {5, 4}),
                          weighted([ids](const Tensor& x) { return ops::embedding(x, ids); }, w));
       }},
  };
  return checks;
}

}  // namespace mcm
