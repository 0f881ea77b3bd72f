// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

// Dense inner loops behind the tensor ops. Every kernel has a serial
// reference implementation and an OpenMP variant that partitions output
// elements across threads; each element is always computed by one thread
// with the same serial reduction order, so results are bit-identical for
// any thread count. The public entry points dispatch on the worker cap.
namespace mcm::kernels {

// Worker cap for the OpenMP variants (1 = serial path). Set once at startup
// from MCM_THREADS; not thread-safe against concurrent kernel calls.
int threads();
void set_threads(int n);

// c[m,n] = a[m,k] * b[k,n]           (accumulate: +=)
void matmul_nn_serial(const double* a, const double* b, double* c, std::int64_t m,
                      std::int64_t k, std::int64_t n, bool accumulate);
void matmul_nn_omp(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n, bool accumulate);
void matmul_nn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n, bool accumulate = false);

// c[m,n] = a[m,k] * b[n,k]^T
void matmul_nt_serial(const double* a, const double* b, double* c, std::int64_t m,
                      std::int64_t k, std::int64_t n, bool accumulate);
void matmul_nt_omp(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n, bool accumulate = false);

// c[m,n] = a[k,m]^T * b[k,n]
void matmul_tn_serial(const double* a, const double* b, double* c, std::int64_t m,
                      std::int64_t k, std::int64_t n, bool accumulate);
void matmul_tn_omp(const double* a, const double* b, double* c, std::int64_t m,
                   std::int64_t k, std::int64_t n, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c, std::int64_t m,
               std::int64_t k, std::int64_t n, bool accumulate = false);

// Row-wise softmax with max subtraction: y[r,:] = softmax(x[r,:]).
void softmax_rows_serial(const double* x, double* y, std::int64_t rows, std::int64_t cols);
void softmax_rows_omp(const double* x, double* y, std::int64_t rows, std::int64_t cols);
void softmax_rows(const double* x, double* y, std::int64_t rows, std::int64_t cols);

// Row-wise normalization; mean/rstd (length rows) are kept for the backward pass.
void layernorm_rows_serial(const double* x, double* y, double* mean, double* rstd,
                           std::int64_t rows, std::int64_t cols, double eps);
void layernorm_rows_omp(const double* x, double* y, double* mean, double* rstd,
                        std::int64_t rows, std::int64_t cols, double eps);
void layernorm_rows(const double* x, double* y, double* mean, double* rstd,
                    std::int64_t rows, std::int64_t cols, double eps);

// Elementwise maps. Op: 0 = gelu(tanh approximation), 1 = sigmoid.
enum class MapOp { kGelu = 0, kSigmoid = 1 };
void map_serial(MapOp op, const double* x, double* y, std::int64_t n);
void map_omp(MapOp op, const double* x, double* y, std::int64_t n);
void map(MapOp op, const double* x, double* y, std::int64_t n);

enum class BinOp { kAdd = 0, kSub = 1, kMul = 2 };
void binary_serial(BinOp op, const double* a, const double* b, double* y, std::int64_t n);
void binary_omp(BinOp op, const double* a, const double* b, double* y, std::int64_t n);
void binary(BinOp op, const double* a, const double* b, double* y, std::int64_t n);

}  // namespace mcm::kernels
