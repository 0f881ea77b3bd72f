// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "mcm/kernels.hpp"
#include "mcm/rng.hpp"

using namespace mcm;

namespace {

std::vector<double> randv(Rng& rng, std::int64_t n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.normal();
  return v;
}

struct ThreadCap {
  explicit ThreadCap(int n) { kernels::set_threads(n); }
  ~ThreadCap() { kernels::set_threads(1); }
};

}  // namespace

// The OpenMP variants must be bit-identical to the serial reference for any
// thread count: every output element is computed by one thread in the same
// reduction order. This is what makes training determinism independent of
// MCM_THREADS.
TEST_CASE("matmul variants match serial bit for bit") {
  Rng rng(5);
  for (auto [m, k, n] : std::vector<std::tuple<int, int, int>>{{3, 4, 5}, {64, 48, 80}, {1, 7, 1}}) {
    auto a = randv(rng, m * k);
    auto b = randv(rng, k * n);
    std::vector<double> ref(static_cast<std::size_t>(m * n)), par(static_cast<std::size_t>(m * n));

    kernels::matmul_nn_serial(a.data(), b.data(), ref.data(), m, k, n, false);
    {
      ThreadCap cap(4);
      kernels::matmul_nn_omp(a.data(), b.data(), par.data(), m, k, n, false);
    }
    CHECK(ref == par);

    auto bt = randv(rng, n * k);
    kernels::matmul_nt_serial(a.data(), bt.data(), ref.data(), m, k, n, false);
    {
      ThreadCap cap(4);
      kernels::matmul_nt_omp(a.data(), bt.data(), par.data(), m, k, n, false);
    }
    CHECK(ref == par);

    auto at = randv(rng, k * m);
    kernels::matmul_tn_serial(at.data(), b.data(), ref.data(), m, k, n, false);
    {
      ThreadCap cap(4);
      kernels::matmul_tn_omp(at.data(), b.data(), par.data(), m, k, n, false);
    }
    CHECK(ref == par);
  }
}

TEST_CASE("accumulating matmul adds onto the output") {
  Rng rng(6);
  auto a = randv(rng, 6), b = randv(rng, 6);  // 2x3 * 3x2
  std::vector<double> base = {1.0, 2.0, 3.0, 4.0};
  auto once = base;
  kernels::matmul_nn_serial(a.data(), b.data(), once.data(), 2, 3, 2, true);
  std::vector<double> prod(4, 0.0);
  kernels::matmul_nn_serial(a.data(), b.data(), prod.data(), 2, 3, 2, false);
  for (int i = 0; i < 4; ++i) CHECK(once[i] == doctest::Approx(base[i] + prod[i]).epsilon(1e-14));
}

TEST_CASE("row kernels match serial bit for bit") {
  Rng rng(7);
  const std::int64_t rows = 33, cols = 17;
  auto x = randv(rng, rows * cols);
  std::vector<double> ref(x.size()), par(x.size());

  kernels::softmax_rows_serial(x.data(), ref.data(), rows, cols);
  {
    ThreadCap cap(3);
    kernels::softmax_rows_omp(x.data(), par.data(), rows, cols);
  }
  CHECK(ref == par);

  std::vector<double> mean_s(rows), rstd_s(rows), mean_p(rows), rstd_p(rows);
  kernels::layernorm_rows_serial(x.data(), ref.data(), mean_s.data(), rstd_s.data(), rows, cols,
                                 1e-12);
  {
    ThreadCap cap(3);
    kernels::layernorm_rows_omp(x.data(), par.data(), mean_p.data(), rstd_p.data(), rows, cols,
                                1e-12);
  }
  CHECK(ref == par);
  CHECK(mean_s == mean_p);
  CHECK(rstd_s == rstd_p);
}

TEST_CASE("elementwise kernels match serial bit for bit") {
  Rng rng(8);
  auto a = randv(rng, 1001), b = randv(rng, 1001);
  std::vector<double> ref(a.size()), par(a.size());
  for (auto op : {kernels::MapOp::kGelu, kernels::MapOp::kSigmoid}) {
    kernels::map_serial(op, a.data(), ref.data(), 1001);
    {
      ThreadCap cap(4);
      kernels::map_omp(op, a.data(), par.data(), 1001);
    }
    CHECK(ref == par);
  }
  for (auto op : {kernels::BinOp::kAdd, kernels::BinOp::kSub, kernels::BinOp::kMul}) {
    kernels::binary_serial(op, a.data(), b.data(), ref.data(), 1001);
    {
      ThreadCap cap(4);
      kernels::binary_omp(op, a.data(), b.data(), par.data(), 1001);
    }
    CHECK(ref == par);
  }
}

TEST_CASE("dispatcher honors the worker cap") {
  CHECK(kernels::threads() == 1);
  kernels::set_threads(0);
  CHECK(kernels::threads() == 1);
  kernels::set_threads(5);
  CHECK(kernels::threads() == 5);
  kernels::set_threads(1);
}
