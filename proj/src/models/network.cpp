#include "dsgan/models/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dsgan/core/error.hpp"
#include "dsgan/simd/kernels.hpp"

namespace dsgan {
namespace {

void apply_activation(const LayerSpec& l, double* v, std::size_t n) {
  switch (l.activation) {
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
      break;
    case Activation::leaky_relu:
      for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : l.leaky_alpha * v[i];
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
      break;
    case Activation::none: break;
  }
}

// grad <- grad * act'(pre), expressed through the activation output y.
void activation_backward(const LayerSpec& l, const double* y, double* grad, std::size_t n) {
  switch (l.activation) {
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) grad[i] = y[i] > 0.0 ? grad[i] : 0.0;
      break;
    case Activation::leaky_relu:
      for (std::size_t i = 0; i < n; ++i) grad[i] = y[i] > 0.0 ? grad[i] : l.leaky_alpha * grad[i];
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) grad[i] *= 1.0 - y[i] * y[i];
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) grad[i] *= y[i] * (1.0 - y[i]);
      break;
    case Activation::none: break;
  }
}

Shape4 layer_output_shape(const LayerSpec& l, const ConvGeometry& g, std::size_t n) {
  return l.kind == LayerKind::deconv ? Shape4{n, l.filters, g.in_h, g.in_w}
                                     : Shape4{n, l.filters, g.out_h, g.out_w};
}

}  // namespace

Network::Network(NetworkSpec spec, BatchNormSettings bn) : spec_(std::move(spec)), bn_(bn) {
  spec_.validate();
  std::size_t channels = spec_.input_channels;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const std::string prefix = "layer" + std::to_string(i) + ".";
    LayerSlots s;
    s.in_channels = channels;
    const Shape4 kshape = l.kind == LayerKind::deconv
                              ? Shape4{channels, l.filters, l.kernel_h, l.kernel_w}
                              : Shape4{l.filters, channels, l.kernel_h, l.kernel_w};
    const auto add = [&](const std::string& name, Shape4 shape, bool trainable, bool reg) {
      params_.push_back({prefix + name, Tensor(shape), Tensor(shape), trainable, reg});
      return params_.size() - 1;
    };
    s.kernel = add("kernel", kshape, true, true);
    s.bias = add("bias", {1, l.filters, 1, 1}, true, false);
    if (l.batch_norm) {
      s.bn_scale = add("bn_scale", {1, channels, 1, 1}, true, false);
      s.bn_shift = add("bn_shift", {1, channels, 1, 1}, true, false);
      s.bn_mean = add("bn_mean", {1, channels, 1, 1}, false, false);
      s.bn_var = add("bn_var", {1, channels, 1, 1}, false, false);
      params_[s.bn_scale].value.fill(1.0);
      params_[s.bn_var].value.fill(1.0);
    }
    slots_.push_back(s);
    channels = l.filters;
  }
  cache_.resize(spec_.layers.size());
}

Parameter& Network::parameter(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ValidationError("no parameter named '" + std::string(name) + "'");
}

const Parameter& Network::parameter(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw ValidationError("no parameter named '" + std::string(name) + "'");
}

Shape4 Network::output_shape(const Shape4& input) const {
  if (input.n == 0 || input.h == 0 || input.w == 0)
    throw ValidationError("network input must be non-empty, got " + input.str());
  if (input.c != spec_.input_channels)
    throw ValidationError("network expects " + std::to_string(spec_.input_channels) +
                          " input channels, got " + std::to_string(input.c));
  const std::size_t down = spec_.downscale();
  if (input.h % down != 0 || input.w % down != 0)
    throw ValidationError("input size " + std::to_string(input.h) + "x" +
                          std::to_string(input.w) + " must be divisible by " +
                          std::to_string(down) + " (2^" +
                          std::to_string(static_cast<int>(std::log2(down))) +
                          " for the strided layers)");
  Shape4 s = input;
  for (const auto& l : spec_.layers) s = layer_output_shape(l, layer_geometry(l, s.c, s.h, s.w), s.n);
  return s;
}

// Forward through one layer. A null cache means inference mode.
Tensor Network::run_layer(std::size_t index, const Tensor& x, LayerCache* cache) const {
  const LayerSpec& l = spec_.layers[index];
  const LayerSlots& s = slots_[index];
  const std::size_t n = x.n(), c = x.c(), plane = x.h() * x.w();
  const ConvGeometry g = layer_geometry(l, c, x.h(), x.w());

  Tensor normalized;
  if (l.batch_norm) {
    normalized = Tensor(x.shape());
    const double* gamma = params_[s.bn_scale].value.data();
    const double* beta = params_[s.bn_shift].value.data();
    std::vector<double> mean(c), inv_std(c);
    if (cache != nullptr) {
      const double count = static_cast<double>(n * plane);
      cache->unbiased_var.assign(c, 0.0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += simd::sum(x.plane(i, ch), plane);
        const double mu = total / count;
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double* p = x.plane(i, ch);
          for (std::size_t k = 0; k < plane; ++k) sq += (p[k] - mu) * (p[k] - mu);
        }
        const double var = sq / count;
        mean[ch] = mu;
        inv_std[ch] = 1.0 / std::sqrt(var + bn_.epsilon);
        cache->unbiased_var[ch] = count > 1.0 ? sq / (count - 1.0) : var;
      }
    } else {
      const double* run_mean = params_[s.bn_mean].value.data();
      const double* run_var = params_[s.bn_var].value.data();
      for (std::size_t ch = 0; ch < c; ++ch) {
        mean[ch] = run_mean[ch];
        inv_std[ch] = 1.0 / std::sqrt(run_var[ch] + bn_.epsilon);
      }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double scale = gamma[ch] * inv_std[ch];
      const double shift = beta[ch] - mean[ch] * scale;
      for (std::size_t i = 0; i < n; ++i) {
        const double* src = x.plane(i, ch);
        double* dst = normalized.plane(i, ch);
        for (std::size_t k = 0; k < plane; ++k) dst[k] = src[k] * scale + shift;
      }
    }
    if (cache != nullptr) {
      cache->mean = std::move(mean);
      cache->inv_std = std::move(inv_std);
    }
  }
  const Tensor& conv_in = l.batch_norm ? normalized : x;

  Tensor out(layer_output_shape(l, g, n));
  const double* kernel = params_[s.kernel].value.data();
  const double* bias = params_[s.bias].value.data();
  const std::size_t out_plane = out.h() * out.w();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < l.filters; ++o) std::fill_n(out.plane(i, o), out_plane, bias[o]);
    if (l.kind == LayerKind::deconv)
      conv_backward_data(g, conv_in.sample(i), kernel, out.sample(i));
    else
      conv_forward(g, conv_in.sample(i), kernel, out.sample(i));
  }
  apply_activation(l, out.data(), out.size());

  if (cache != nullptr) {
    cache->geometry = g;
    cache->normalized = std::move(normalized);
    cache->output = out;
  }
  return out;
}

Tensor Network::forward(const Tensor& x) const {
  output_shape(x.shape());
  Tensor cur = x;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) cur = run_layer(i, cur, nullptr);
  return cur;
}

Tensor Network::forward_train(const Tensor& x) {
  output_shape(x.shape());
  input_ = x;
  const Tensor* cur = &input_;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    run_layer(i, *cur, &cache_[i]);
    if (spec_.layers[i].batch_norm) {
      double* run_mean = params_[slots_[i].bn_mean].value.data();
      double* run_var = params_[slots_[i].bn_var].value.data();
      for (std::size_t ch = 0; ch < cache_[i].mean.size(); ++ch) {
        run_mean[ch] = bn_.momentum * run_mean[ch] + (1.0 - bn_.momentum) * cache_[i].mean[ch];
        run_var[ch] =
            bn_.momentum * run_var[ch] + (1.0 - bn_.momentum) * cache_[i].unbiased_var[ch];
      }
    }
    cur = &cache_[i].output;
  }
  has_cache_ = true;
  return cache_.back().output;
}

Tensor Network::backward(const Tensor& grad_out, bool accumulate_param_grads,
                         bool need_input_grad) {
  if (!has_cache_) throw std::logic_error("Network::backward called without forward_train");
  if (grad_out.shape() != cache_.back().output.shape())
    throw ValidationError("backward: gradient shape " + grad_out.shape().str() +
                          " does not match output " + cache_.back().output.shape().str());
  Tensor grad = grad_out;
  for (std::size_t idx = spec_.layers.size(); idx-- > 0;) {
    const LayerSpec& l = spec_.layers[idx];
    const LayerSlots& s = slots_[idx];
    LayerCache& cache = cache_[idx];
    const ConvGeometry& g = cache.geometry;
    const Tensor& x = idx == 0 ? input_ : cache_[idx - 1].output;
    const Tensor& conv_in = l.batch_norm ? cache.normalized : x;
    const std::size_t n = x.n(), c = x.c(), plane = x.h() * x.w();

    activation_backward(l, cache.output.data(), grad.data(), grad.size());

    const std::size_t out_plane = grad.h() * grad.w();
    if (accumulate_param_grads) {
      double* dbias = params_[s.bias].grad.data();
      double* dkernel = params_[s.kernel].grad.data();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < l.filters; ++o) dbias[o] += simd::sum(grad.plane(i, o), out_plane);
        if (l.kind == LayerKind::deconv)
          conv_backward_weights(g, grad.sample(i), conv_in.sample(i), dkernel);
        else
          conv_backward_weights(g, conv_in.sample(i), grad.sample(i), dkernel);
      }
    }

    const bool want_input = idx > 0 || need_input_grad;
    if (!want_input && !(l.batch_norm && accumulate_param_grads)) {
      grad = Tensor();
      break;
    }

    Tensor dconv_in(x.shape());
    const double* kernel = params_[s.kernel].value.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (l.kind == LayerKind::deconv)
        conv_forward(g, grad.sample(i), kernel, dconv_in.sample(i));
      else
        conv_backward_data(g, grad.sample(i), kernel, dconv_in.sample(i));
    }

    if (!l.batch_norm) {
      grad = std::move(dconv_in);
      continue;
    }

    const double* gamma = params_[s.bn_scale].value.data();
    const double count = static_cast<double>(n * plane);
    Tensor dx(x.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double mu = cache.mean[ch], inv = cache.inv_std[ch];
      double dbeta = 0.0, dgamma = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* dy = dconv_in.plane(i, ch);
        const double* xi = x.plane(i, ch);
        for (std::size_t k = 0; k < plane; ++k) {
          dbeta += dy[k];
          dgamma += dy[k] * (xi[k] - mu) * inv;
        }
      }
      if (accumulate_param_grads) {
        params_[s.bn_scale].grad.data()[ch] += dgamma;
        params_[s.bn_shift].grad.data()[ch] += dbeta;
      }
      const double factor = gamma[ch] * inv / count;
      for (std::size_t i = 0; i < n; ++i) {
        const double* dy = dconv_in.plane(i, ch);
        const double* xi = x.plane(i, ch);
        double* out = dx.plane(i, ch);
        for (std::size_t k = 0; k < plane; ++k)
          out[k] = factor * (count * dy[k] - dbeta - (xi[k] - mu) * inv * dgamma);
      }
    }
    grad = want_input ? std::move(dx) : Tensor();
    if (!want_input) break;
  }
  return grad;
}

void Network::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void init_weights(Network& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (auto& p : net.parameters()) {
    const std::string_view name = p.name;
    if (name.ends_with(".kernel"))
      for (double& v : p.value.values()) v = normal(rng);
    else if (name.ends_with(".bn_scale") || name.ends_with(".bn_var"))
      p.value.fill(1.0);
    else
      p.value.fill(0.0);
    p.grad.fill(0.0);
  }
}

Network make_network(const NetworkSpec& spec, std::uint64_t seed) {
  Network net(spec);
  init_weights(net, seed);
  return net;
}

double kernel_sum_of_squares(const Network& net) {
  double total = 0.0;
  for (const auto& p : net.parameters())
    if (p.regularized) total += simd::dot(p.value.data(), p.value.data(), p.value.size());
  return total;
}

}  // namespace dsgan
