#include "dsgan/training/losses.hpp"

#include <algorithm>
#include <cmath>

#include "dsgan/core/error.hpp"
#include "dsgan/simd/kernels.hpp"

namespace dsgan {
namespace {

void check_map(const Tensor& map, const char* what) {
  if (map.empty()) throw ValidationError(std::string(what) + ": empty probability map");
  for (double v : map.values())
    if (!std::isnan(v) && !(v >= 0.0 && v <= 1.0))
      throw ValidationError(std::string(what) + ": probability map entries must lie in [0,1]");
}

// -mean log(p) with p = target ? D : 1 - D.
LossTerm log_term(const Tensor& map, bool target_real) {
  const double count = static_cast<double>(map.size());
  LossTerm out{0.0, Tensor(map.shape())};
  const auto values = map.values();
  auto grad = out.grad.values();
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double raw = values[i];
    const double p = std::clamp(raw, kProbEpsilon, 1.0 - kProbEpsilon);
    const bool active = raw > kProbEpsilon && raw < 1.0 - kProbEpsilon;
    if (target_real) {
      total += std::log(p);
      grad[i] = active ? -1.0 / (count * p) : 0.0;
    } else {
      total += std::log1p(-p);
      grad[i] = active ? 1.0 / (count * (1.0 - p)) : 0.0;
    }
  }
  out.value = -total / count;
  return out;
}

}  // namespace

LossTerm real_term(const Tensor& d_real) {
  check_map(d_real, "real_term");
  return log_term(d_real, true);
}

LossTerm fake_term(const Tensor& d_fake) {
  check_map(d_fake, "fake_term");
  return log_term(d_fake, false);
}

DiscriminatorLoss loss_discriminator(const Tensor& d_real, const Tensor& d_fake) {
  if (d_real.shape().c != d_fake.shape().c || d_real.h() != d_fake.h() ||
      d_real.w() != d_fake.w())
    throw ValidationError("loss_discriminator: real and fake maps differ in shape");
  LossTerm r = real_term(d_real);
  LossTerm f = fake_term(d_fake);
  return {r.value + f.value, std::move(r.grad), std::move(f.grad)};
}

LossTerm loss_generator(const Tensor& d_fake) {
  check_map(d_fake, "loss_generator");
  return log_term(d_fake, true);
}

double l2_penalty(const Network& net, double lambda) {
  if (lambda < 0.0) throw ValidationError("l2 lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  return lambda * kernel_sum_of_squares(net);
}

void add_l2_gradient(Network& net, double lambda) {
  if (lambda == 0.0) return;
  for (auto& p : net.parameters())
    if (p.regularized) simd::axpy(2.0 * lambda, p.value.data(), p.grad.data(), p.value.size());
}

}  // namespace dsgan
