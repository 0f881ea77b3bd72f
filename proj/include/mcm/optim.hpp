// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcm/tensor.hpp"

namespace mcm::optim {

struct AdamConfig {
  double lr = 3e-4;  // peak rate; the schedule anneals it to zero
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 6.0;
};

// First/second moment buffers keyed by parameter name; step counter drives
// the bias correction.
struct OptimizerState {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
  std::int64_t step_count = 0;
};

// lr(t) = peak * 0.5 * (1 + cos(pi * t / total)); t=0 gives the peak, t=total
// gives zero.
double cosine_lr(double peak, std::int64_t t, std::int64_t total);

// One Adam step over every requires_grad parameter: global-norm clip first
// (grads are scaled in place when the norm exceeds the limit), then the
// bias-corrected update at the scheduled rate. Parameters without a gradient
// buffer are treated as zero-gradient. Non-finite gradients abort, naming
// the parameter. Gradients are cleared afterwards.
void optimizer_step(const std::vector<std::pair<std::string, Tensor>>& params,
                    OptimizerState& state, const AdamConfig& cfg, std::int64_t t,
                    std::int64_t total_steps);

}  // namespace mcm::optim
