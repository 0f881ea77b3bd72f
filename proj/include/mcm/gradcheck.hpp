// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mcm/rng.hpp"
#include "mcm/tensor.hpp"

namespace mcm {

using ScalarFn = std::function<Tensor(const Tensor&)>;

// Max over elements of |analytic - central difference| / max(|analytic|,
// |fd|, 1e-8), with step h. The closure must map a tensor to a scalar.
double grad_check(const ScalarFn& fn, const Tensor& input, double h = 1e-5);

// One registered differentiable path: builds a seeded input and a scalar
// closure around the op so the whole surface can be swept numerically.
struct OpCheck {
  std::string name;
  std::function<std::pair<Tensor, ScalarFn>(Rng&)> make;
};

const std::vector<OpCheck>& op_checks();

}  // namespace mcm
