// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mcm/errors.hpp"
#include "mcm/gradcheck.hpp"
#include "mcm/ops.hpp"
#include "mcm/rng.hpp"
#include "mcm/tensor.hpp"

using namespace mcm;

namespace {
Tensor randn(Rng& rng, std::vector<std::int64_t> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (auto& v : t.data()) v = rng.normal();
  return t;
}
}  // namespace

TEST_CASE("matmul 1x1") {
  Tensor a = Tensor::from_data({1, 1}, {2.0});
  Tensor b = Tensor::from_data({1, 1}, {3.0});
  CHECK(ops::matmul(a, b).data()[0] == doctest::Approx(6.0));
}

TEST_CASE("softmax symmetry") {
  Tensor x = Tensor::from_data({2}, {0.0, 0.0});
  Tensor y = ops::softmax(x);
  CHECK(y.data()[0] == doctest::Approx(0.5));
  CHECK(y.data()[1] == doctest::Approx(0.5));
}

TEST_CASE("softmax rows are distributions") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    Tensor x = randn(rng, {6, 9});
    Tensor y = ops::softmax(x);
    for (int r = 0; r < 6; ++r) {
      double sum = 0.0;
      for (int c = 0; c < 9; ++c) {
        const double v = y.data()[r * 9 + c];
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("layernorm normalizes each row") {
  Rng rng(7);
  Tensor x = randn(rng, {3, 16});
  Tensor y = ops::layernorm(x);
  for (int r = 0; r < 3; ++r) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < 16; ++c) mean += y.data()[r * 16 + c];
    mean /= 16.0;
    for (int c = 0; c < 16; ++c) {
      const double d = y.data()[r * 16 + c] - mean;
      var += d * d;
    }
    var /= 16.0;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("backward of sum is all ones") {
  Tensor x = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
  ops::sum_all(x).backward();
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("backward of mse against zero") {
  Tensor x = Tensor::from_data({1}, {2.0}, true);
  Tensor zero = Tensor::from_data({1}, {0.0});
  ops::mse(x, zero).backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("gradient accumulates across consumers") {
  Tensor x = Tensor::from_data({1}, {1.0}, true);
  ops::sum_all(ops::add(x, x)).backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("independent subgraphs keep independent gradients") {
  Rng rng(11);
  Tensor x = randn(rng, {4});
  Tensor y = randn(rng, {4});
  Tensor wx = randn(rng, {4});
  Tensor wy = randn(rng, {4});

  Tensor x1 = x.detached_copy();
  x1.set_requires_grad(true);
  ops::sum_all(ops::mul(x1, wx)).backward();

  Tensor y1 = y.detached_copy();
  y1.set_requires_grad(true);
  ops::sum_all(ops::mul(y1, wy)).backward();

  Tensor x2 = x.detached_copy();
  Tensor y2 = y.detached_copy();
  x2.set_requires_grad(true);
  y2.set_requires_grad(true);
  ops::add(ops::sum_all(ops::mul(x2, wx)), ops::sum_all(ops::mul(y2, wy))).backward();

  for (int i = 0; i < 4; ++i) {
    CHECK(x2.grad()[i] == doctest::Approx(x1.grad()[i]));
    CHECK(y2.grad()[i] == doctest::Approx(y1.grad()[i]));
  }
}

TEST_CASE("grad_check on a linear closure is near exact") {
  Rng rng(3);
  Tensor w = randn(rng, {4, 4});
  auto fn = [w](const Tensor& t) { return ops::sum_all(ops::mul(t, w)); };
  CHECK(grad_check(fn, randn(rng, {4, 4})) <= 1e-9);
}

TEST_CASE("grad_check on sigmoid sum") {
  Rng rng(4);
  auto fn = [](const Tensor& t) { return ops::sum_all(ops::sigmoid(t)); };
  CHECK(grad_check(fn, randn(rng, {4, 4})) <= 1e-4);
}

TEST_CASE("grad_check sweeps every registered op on 3 seeds") {
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    for (const auto& check : op_checks()) {
      Rng rng(seed);
      auto [input, fn] = check.make(rng);
      const double err = grad_check(fn, input);
      INFO(check.name, " seed ", seed, " err ", err);
      CHECK(err <= 1e-4);
    }
  }
}

TEST_CASE("shape mismatch names the op and both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  try {
    ops::matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("(2,3)") != std::string::npos);
  }
}

TEST_CASE("non-finite input is rejected") {
  Tensor a = Tensor::from_data({2}, {1.0, std::nan("")});
  Tensor b = Tensor::from_data({2}, {1.0, 1.0});
  CHECK_THROWS_AS(ops::add(a, b), NumericError);
}

TEST_CASE("backward requires a scalar with a graph") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor y = ops::scale(x, 2.0);
  CHECK_THROWS_AS(y.backward(), ShapeError);  // non-scalar

  Tensor loss = ops::sum_all(y);
  loss.backward();
  CHECK_THROWS_AS(loss.backward(), NumericError);  // graph already released
}

TEST_CASE("no graph is recorded under NoGradGuard") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  NoGradGuard ng;
  Tensor y = ops::sum_all(x);
  CHECK(!y.has_node());
  CHECK(!y.requires_grad());
}

TEST_CASE("bce matches a hand-rolled reference and respects the clamp") {
  Tensor p = Tensor::from_data({1, 2}, {0.5, 1.0});
  Tensor t = Tensor::from_data({1, 2}, {1.0, 1.0});
  const double expected = -std::log(0.5) - std::log(1.0 - ops::kBceClamp);
  CHECK(ops::bce(p, t).item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 16; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
}
