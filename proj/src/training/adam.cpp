#include "dsgan/training/adam.hpp"

#include <cmath>

#include "dsgan/core/error.hpp"

namespace dsgan {

Adam::Adam(const Network& net, AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0) || !(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0) || !(config_.epsilon > 0.0))
    throw ValidationError("Adam: learning rate must be > 0 and betas in [0,1)");
  for (const auto& p : net.parameters())
    if (p.trainable) {
      m_.emplace_back(p.value.shape());
      v_.emplace_back(p.value.shape());
    }
}

void Adam::step(Network& net) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  std::size_t slot = 0;
  for (auto& p : net.parameters()) {
    if (!p.trainable) continue;
    if (slot >= m_.size() || m_[slot].shape() != p.value.shape())
      throw ValidationError("Adam: optimizer state does not match network '" + p.name + "'");
    double* w = p.value.data();
    const double* g = p.grad.data();
    double* m = m_[slot].data();
    double* v = v_[slot].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    ++slot;
  }
}

}  // namespace dsgan
