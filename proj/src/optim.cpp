// Copyright 2026 the mcmvqa authors
// SPDX-License-Identifier: Apache-2.0
#include "mcm/optim.hpp"

#include <cmath>

#include "mcm/errors.hpp"

namespace mcm::optim {

double cosine_lr(double peak, std::int64_t t, std::int64_t total) {
  if (total < 1) throw ConfigError("cosine_lr: total steps must be >= 1");
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return peak * 0.5 * (1.0 + std::cos(3.141592653589793 * frac));
}

void optimizer_step(const std::vector<std::pair<std::string, Tensor>>& params,
                    OptimizerState& state, const AdamConfig& cfg, std::int64_t t,
                    std::int64_t total_steps) {
  double sq_norm = 0.0;
  for (const auto& [name, p] : params) {
    if (!p.requires_grad() || !p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NumericError("optimizer_step: non-finite gradient in " + name);
      sq_norm += g * g;
    }
  }
  const double norm = std::sqrt(sq_norm);
  if (norm > cfg.clip_norm) {
    const double s = cfg.clip_norm / norm;
    for (const auto& [name, p] : params) {
      if (!p.requires_grad() || !p.has_grad()) continue;
      Tensor t_mut = p;
      for (double& g : t_mut.grad()) g *= s;
    }
  }

  state.step_count += 1;
  const double lr = cosine_lr(cfg.lr, t, total_steps);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));

  for (const auto& [name, p] : params) {
    if (!p.requires_grad()) continue;
    Tensor t_mut = p;
    auto& [m, v] = state.moments[name];
    if (m.empty()) {
      m.assign(t_mut.data().size(), 0.0);
      v.assign(t_mut.data().size(), 0.0);
    }
    const bool has_g = t_mut.has_grad();
    auto& data = t_mut.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = has_g ? t_mut.grad()[i] : 0.0;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      data[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    t_mut.zero_grad();
  }
}

}  // namespace mcm::optim
