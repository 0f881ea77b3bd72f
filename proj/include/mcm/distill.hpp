// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mcm/model.hpp"
#include "mcm/tensor.hpp"

namespace mcm::distill {

// Which (layer, head) taps feed the cls and object losses, plus the loss
// weights. A weight of zero drops that term from the total, which is how the
// ablation variants are produced.
struct DistillConfig {
  std::vector<std::pair<int, int>> tap_set;  // 1-based (layer, head)
  double w_cls = 1.0;
  double w_object = 1.0;
  double w_pred = 1.0;
  double w_nll = 1.0;

  void validate(std::int64_t layers_cross, std::int64_t heads) const;
};

// All pairs at small scale; the {1,4} x {1,4,5} subset once the stack is deep
// and wide enough for that selection to exist.
std::vector<std::pair<int, int>> default_tap_set(std::int64_t layers_cross, std::int64_t heads);

struct LossBreakdown {
  Tensor l_cls, l_object, l_pred, l_nll;
  Tensor total;
};

// Sum over the tap set of the mean squared error between per-head CLS
// context vectors; the teacher side is detached.
Tensor loss_cls(const DistillationTaps& teacher, const DistillationTaps& student,
                const DistillConfig& cfg);

// Same reduction over the raw pre-softmax CLS-to-object score vectors.
Tensor loss_object(const DistillationTaps& teacher, const DistillationTaps& student,
                   const DistillConfig& cfg);

// Binary cross-entropy of student probabilities against detached teacher
// probabilities: sum over answers, mean over the batch.
Tensor loss_pred(const Tensor& teacher_probs, const Tensor& student_probs);

// Binary cross-entropy against the gold answer vector y.
Tensor loss_nll(const Tensor& gold, const Tensor& student_probs);

LossBreakdown total_loss(const DistillationTaps& teacher, const DistillationTaps& student,
                         const Tensor& gold, const DistillConfig& cfg);

}  // namespace mcm::distill
