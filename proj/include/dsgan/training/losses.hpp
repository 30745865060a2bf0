#pragma once

#include "dsgan/core/tensor.hpp"
#include "dsgan/models/network.hpp"

namespace dsgan {

// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before log.
inline constexpr double kProbEpsilon = 1e-7;

struct LossTerm {
  double value = 0.0;
  Tensor grad;  // d value / d map; zero where the clamp is active
};

// -mean log D(x) over batch and spatial positions.
LossTerm real_term(const Tensor& d_real);
// -mean log(1 - D(G(z))) over batch and spatial positions.
LossTerm fake_term(const Tensor& d_fake);

struct DiscriminatorLoss {
  double value = 0.0;
  Tensor grad_real, grad_fake;
};

// Spatially averaged discriminator cross-entropy (minimized):
//   -[mean log D(x) + mean log(1 - D(G(z)))]
DiscriminatorLoss loss_discriminator(const Tensor& d_real, const Tensor& d_fake);

// Non-saturating generator loss: -mean log D(G(z)).
LossTerm loss_generator(const Tensor& d_fake);

// lambda * sum of squared kernel entries.
double l2_penalty(const Network& net, double lambda);
// Adds 2 * lambda * w to the gradients of regularized parameters.
void add_l2_gradient(Network& net, double lambda);

}  // namespace dsgan
