#pragma once

#include <cstdint>
#include <vector>

#include "dsgan/core/tensor.hpp"
#include "dsgan/models/network.hpp"

namespace dsgan {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Adam with bias correction over the trainable parameters of one network.
// Regularization enters only through the gradients.
class Adam {
 public:
  Adam(const Network& net, AdamConfig config);

  void step(Network& net);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  // First and second moment buffers, parallel to the trainable parameters.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_, v_;
  std::uint64_t steps_ = 0;
};

}  // namespace dsgan
