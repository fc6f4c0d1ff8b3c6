#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/linalg.hpp"

namespace vlshot {

struct AdamConfig {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.001;  // L2 term added to the gradient
};

/// Adam over a list of parameter vectors. Only slots flagged active are
/// touched; inactive slots keep their values bit for bit.
class Adam {
 public:
  Adam(AdamConfig cfg, const std::vector<std::size_t>& sizes) : cfg_(cfg) {
    for (auto n : sizes) {
      m_.emplace_back(n, 0.0);
      v_.emplace_back(n, 0.0);
    }
  }

  void step(std::vector<Vector*> params, const std::vector<Vector>& grads, const std::vector<bool>& active,
            const std::vector<bool>& decay) {
    require(params.size() == m_.size() && grads.size() == m_.size() && active.size() == m_.size() &&
                decay.size() == m_.size(),
            ErrorCode::contract, "adam: slot count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t s = 0; s < m_.size(); ++s) {
      if (!active[s]) continue;
      auto& p = *params[s];
      for (std::size_t i = 0; i < p.size(); ++i) {
        double g = grads[s][i];
        if (decay[s]) g += cfg_.weight_decay * p[i];
        m_[s][i] = cfg_.beta1 * m_[s][i] + (1.0 - cfg_.beta1) * g;
        v_[s][i] = cfg_.beta2 * v_[s][i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[s][i] / bc1;
        const double vhat = v_[s][i] / bc2;
        p[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

  std::size_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Vector> m_, v_;
  std::size_t t_ = 0;
};

/// Scales the active gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
inline double clip_grad_norm(std::vector<Vector>& grads, const std::vector<bool>& active, double max_norm) {
  double sq = 0.0;
  for (std::size_t s = 0; s < grads.size(); ++s)
    if (active[s])
      for (double g : grads[s]) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / (norm + 1e-6);
    for (std::size_t s = 0; s < grads.size(); ++s)
      if (active[s])
        for (double& g : grads[s]) g *= f;
  }
  return norm;
}

}  // namespace vlshot
