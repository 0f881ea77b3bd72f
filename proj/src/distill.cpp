// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/distill.hpp"

#include <string>

#include "mcm/errors.hpp"
#include "mcm/ops.hpp"

namespace mcm::distill {

void DistillConfig::validate(std::int64_t layers_cross, std::int64_t heads) const {
  if (tap_set.empty()) throw ConfigError("distill config: tap_set must be nonempty");
  for (auto [l, j] : tap_set)
    if (l < 1 || l > layers_cross || j < 1 || j > heads)
      throw ConfigError("distill config: tap (" + std::to_string(l) + "," + std::to_string(j) +
                        ") outside 1.." + std::to_string(layers_cross) + " x 1.." +
                        std::to_string(heads));
  if (w_cls < 0 || w_object < 0 || w_pred < 0 || w_nll < 0)
    throw ConfigError("distill config: loss weights must be >= 0");
}

std::vector<std::pair<int, int>> default_tap_set(std::int64_t layers_cross, std::int64_t heads) {
  std::vector<std::pair<int, int>> taps;
  if (layers_cross >= 4 && heads >= 5) {
    for (int l : {1, 4})
      for (int j : {1, 4, 5}) taps.emplace_back(l, j);
    return taps;
  }
  for (int l = 1; l <= layers_cross; ++l)
    for (int j = 1; j <= heads; ++j) taps.emplace_back(l, j);
  return taps;
}

namespace {

Tensor tap_or_throw(const DistillationTaps& taps, int l, int j, const char* who) {
  auto it = taps.cls_taps.find({l, j});
  if (it == taps.cls_taps.end())
    throw ShapeError(std::string("loss_cls: missing ") + who + " tap (" + std::to_string(l) +
                     "," + std::to_string(j) + ")");
  return it->second;
}

// (B, k) slice of the rank-4 score stack for one (layer, head).
Tensor z_slice(const Tensor& z, int l, int j) {
  const std::int64_t b = z.dim(0), k = z.dim(3);
  Tensor layer = ops::slice(z, 1, l - 1, 1);   // (B,1,heads,k)
  Tensor head = ops::slice(layer, 2, j - 1, 1);  // (B,1,1,k)
  return ops::reshape(head, {b, k});
}

}  // namespace

Tensor loss_cls(const DistillationTaps& teacher, const DistillationTaps& student,
                const DistillConfig& cfg) {
  Tensor sum;
  for (auto [l, j] : cfg.tap_set) {
    Tensor t = tap_or_throw(teacher, l, j, "teacher").detached_copy();
    Tensor s = tap_or_throw(student, l, j, "student");
    if (t.shape() != s.shape())
      throw ShapeError("loss_cls: tap shape mismatch " + t.shape_str() + " vs " + s.shape_str());
    Tensor term = ops::mse(s, t);
    sum = sum.defined() ? ops::add(sum, term) : term;
  }
  return sum;
}

Tensor loss_object(const DistillationTaps& teacher, const DistillationTaps& student,
                   const DistillConfig& cfg) {
  const Tensor& zt = teacher.z_logits;
  const Tensor& zs = student.z_logits;
  if (zt.shape() != zs.shape())
    throw ShapeError("loss_object: score stacks differ " + zt.shape_str() + " vs " +
                     zs.shape_str());
  Tensor zt_const = zt.detached_copy();
  Tensor sum;
  for (auto [l, j] : cfg.tap_set) {
    Tensor term = ops::mse(z_slice(zs, l, j), z_slice(zt_const, l, j));
    sum = sum.defined() ? ops::add(sum, term) : term;
  }
  return sum;
}

Tensor loss_pred(const Tensor& teacher_probs, const Tensor& student_probs) {
  return ops::bce(student_probs, teacher_probs.detached_copy());
}

Tensor loss_nll(const Tensor& gold, const Tensor& student_probs) {
  return ops::bce(student_probs, gold.detached_copy());
}

LossBreakdown total_loss(const DistillationTaps& teacher, const DistillationTaps& student,
                         const Tensor& gold, const DistillConfig& cfg) {
  LossBreakdown out;
  out.l_cls = loss_cls(teacher, student, cfg);
  out.l_object = loss_object(teacher, student, cfg);
  out.l_pred = loss_pred(teacher.answer_probs, student.answer_probs);
  out.l_nll = loss_nll(gold, student.answer_probs);
  out.total = ops::add(ops::add(ops::scale(out.l_cls, cfg.w_cls), ops::scale(out.l_object, cfg.w_object)),
                       ops::add(ops::scale(out.l_pred, cfg.w_pred), ops::scale(out.l_nll, cfg.w_nll)));
  return out;
}

}  // namespace mcm::distill
