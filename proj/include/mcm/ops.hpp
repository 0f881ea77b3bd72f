// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mcm/tensor.hpp"

// Forward ops with reverse-mode rules. Shapes are explicit: no implicit
// broadcasting anywhere; the only shape-coupled ops (add_bias, scale_shift)
// state their suffix contract. Every op validates shapes and rejects
// non-finite inputs, naming itself in the error.
namespace mcm::ops {

// (m,k) x (k,n) -> (m,n)
Tensor matmul(const Tensor& a, const Tensor& b);

// (B,m,k) x (B,k,n) -> (B,m,n)
Tensor bmm(const Tensor& a, const Tensor& b);

// Rank 2: (m,n) -> (n,m). Rank 3: (B,m,n) -> (B,n,m).
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// b.shape must be a suffix of x.shape; b is added to every leading slice.
Tensor add_bias(const Tensor& x, const Tensor& b);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, std::int64_t start, std::int64_t len);
Tensor reshape(const Tensor& x, std::vector<std::int64_t> shape);

// Softmax over the last axis.
Tensor softmax(const Tensor& x);

// Zero-mean unit-variance normalization over the last axis (no affine part).
Tensor layernorm(const Tensor& x, double eps = 1e-12);

// y = x * gamma + beta with gamma/beta of length last-dim, applied per row.
Tensor scale_shift(const Tensor& x, const Tensor& gamma, const Tensor& beta);

Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Mean over all elements of (a-b)^2.
Tensor mse(const Tensor& a, const Tensor& b);

// Binary cross-entropy between probabilities p and targets t, both (B,A):
// sum over the last axis, mean over the first. p is clamped to
// [1e-7, 1-1e-7] before the logs; t is treated as a constant.
Tensor bce(const Tensor& p, const Tensor& t);

// Row gather: (V,d) table and (B,n) ids -> (B,n,d).
Tensor embedding(const Tensor& table, const std::vector<std::vector<std::int64_t>>& ids);

constexpr double kBceClamp = 1e-7;

}  // namespace mcm::ops
