// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mcm::kernels {

namespace {
int g_threads = 1;

// Work sizes below this run serially even when more workers are available.
constexpr std::int64_t kParallelMin = 16 * 1024;
}  // namespace

int threads() { return g_threads; }

void set_threads(int n) { g_threads = n < 1 ? 1 : n; }

// ---------------------------------------------------------------- matmul_nn

void matmul_nn_serial(const double* a, const double* b, double* c, std::int64_t m,
                      std::int64_t k, std::int64_t n, bool accumulate) {
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + l * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nn_omp(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n, bool accumulate) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + l * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n, bool accumulate) {
  if (g_threads > 1 && m * k * n >= kParallelMin && m > 1)
    matmul_nn_omp(a, b, c, m, k, n, accumulate);
  else
    matmul_nn_serial(a, b, c, m, k, n, accumulate);
}

// ---------------------------------------------------------------- matmul_nt

void matmul_nt_serial(const double* a, const double* b, double* c, std::int64_t m,
                      std::int64_t k, std::int64_t n, bool accumulate) {
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::int64_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] = accumulate ? ci[j] + acc : acc;
    }
  }
}

void matmul_nt_omp(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n, bool accumulate) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::int64_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] = accumulate ? ci[j] + acc : acc;
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n, bool accumulate) {
  if (g_threads > 1 && m * k * n >= kParallelMin && m > 1)
    matmul_nt_omp(a, b, c, m, k, n, accumulate);
  else
    matmul_nt_serial(a, b, c, m, k, n, accumulate);
}

// ---------------------------------------------------------------- matmul_tn

void matmul_tn_serial(const double* a, const double* b, double* c, std::int64_t m,
                      std::int64_t k, std::int64_t n, bool accumulate) {
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = a[l * m + i];
      const double* bl = b + l * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_tn_omp(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n, bool accumulate) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = a[l * m + i];
      const double* bl = b + l * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n, bool accumulate) {
  if (g_threads > 1 && m * k * n >= kParallelMin && m > 1)
    matmul_tn_omp(a, b, c, m, k, n, accumulate);
  else
    matmul_tn_serial(a, b, c, m, k, n, accumulate);
}

// ----------------------------------------------------------------- softmax

namespace {
inline void softmax_row(const double* x, double* y, std::int64_t cols) {
  double mx = x[0];
  for (std::int64_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
  double sum = 0.0;
  for (std::int64_t j = 0; j < cols; ++j) {
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  const double inv = 1.0 / sum;
  for (std::int64_t j = 0; j < cols; ++j) y[j] *= inv;
}
}  // namespace

void softmax_rows_serial(const double* x, double* y, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r) softmax_row(x + r * cols, y + r * cols, cols);
}

void softmax_rows_omp(const double* x, double* y, std::int64_t rows, std::int64_t cols) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) softmax_row(x + r * cols, y + r * cols, cols);
}

void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t cols) {
  if (g_threads > 1 && rows * cols >= kParallelMin && rows > 1)
    softmax_rows_omp(x, y, rows, cols);
  else
    softmax_rows_serial(x, y, rows, cols);
}

// --------------------------------------------------------------- layernorm

namespace {
inline void layernorm_row(const double* x, double* y, double* mean, double* rstd,
                          std::int64_t cols, double eps) {
  double mu = 0.0;
  for (std::int64_t j = 0; j < cols; ++j) mu += x[j];
  mu /= static_cast<double>(cols);
  double var = 0.0;
  for (std::int64_t j = 0; j < cols; ++j) {
    const double d = x[j] - mu;
    var += d * d;
  }
  var /= static_cast<double>(cols);
  const double rs = 1.0 / std::sqrt(var + eps);
  for (std::int64_t j = 0; j < cols; ++j) y[j] = (x[j] - mu) * rs;
  *mean = mu;
  *rstd = rs;
}
}  // namespace

void layernorm_rows_serial(const double* x, double* y, double* mean, double* rstd,
                           std::int64_t rows, std::int64_t cols, double eps) {
  for (std::int64_t r = 0; r < rows; ++r)
    layernorm_row(x + r * cols, y + r * cols, mean + r, rstd + r, cols, eps);
}

void layernorm_rows_omp(const double* x, double* y, double* mean, double* rstd,
                        std::int64_t rows, std::int64_t cols, double eps) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    layernorm_row(x + r * cols, y + r * cols, mean + r, rstd + r, cols, eps);
}

void layernorm_rows(const double* x, double* y, double* mean, double* rstd,
                    std::int64_t rows, std::int64_t cols, double eps) {
  if (g_threads > 1 && rows * cols >= kParallelMin && rows > 1)
    layernorm_rows_omp(x, y, mean, rstd, rows, cols, eps);
  else
    layernorm_rows_serial(x, y, mean, rstd, rows, cols, eps);
}

// -------------------------------------------------------------- elementwise

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

inline double map_one(MapOp op, double v) {
  switch (op) {
    case MapOp::kGelu: {
      const double t = std::tanh(kGeluC * (v + 0.044715 * v * v * v));
      return 0.5 * v * (1.0 + t);
    }
    case MapOp::kSigmoid:
      return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

inline double binary_one(BinOp op, double a, double b) {
  switch (op) {
    case BinOp::kAdd: return a + b;
    case BinOp::kSub: return a - b;
    case BinOp::kMul: return a * b;
  }
  return a;
}
}  // namespace

void map_serial(MapOp op, const double* x, double* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = map_one(op, x[i]);
}

void map_omp(MapOp op, const double* x, double* y, std::int64_t n) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] = map_one(op, x[i]);
}

void map(MapOp op, const double* x, double* y, std::int64_t n) {
  if (g_threads > 1 && n >= kParallelMin)
    map_omp(op, x, y, n);
  else
    map_serial(op, x, y, n);
}

void binary_serial(BinOp op, const double* a, const double* b, double* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = binary_one(op, a[i], b[i]);
}

void binary_omp(BinOp op, const double* a, const double* b, double* y, std::int64_t n) {
#pragma omp parallel for num_threads(g_threads) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] = binary_one(op, a[i], b[i]);
}

void binary(BinOp op, const double* a, const double* b, double* y, std::int64_t n) {
  if (g_threads > 1 && n >= kParallelMin)
    binary_omp(op, a, b, y, n);
  else
    binary_serial(op, a, b, y, n);
}

}  // namespace mcm::kernels
