#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dsgan/core/tensor.hpp"
#include "dsgan/models/conv.hpp"
#include "dsgan/models/layer_spec.hpp"

namespace dsgan {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  // Running batch-norm statistics are stored but never optimized.
  bool trainable = true;
  // Included in the L2 penalty (convolution kernels only).
  bool regularized = false;
};

struct BatchNormSettings {
  double momentum = 0.99;
  double epsilon = 1e-3;
};

// Fully convolutional network built from a NetworkSpec. Each layer computes
//   x -> [batch norm] -> conv / transposed conv + bias -> activation.
// forward() is const and uses stored batch-norm statistics, so concurrent
// inference over one Network is safe. forward_train() uses batch statistics
// and caches what backward() needs.
class Network {
 public:
  explicit Network(NetworkSpec spec, BatchNormSettings bn = {});

  const NetworkSpec& spec() const { return spec_; }
  const BatchNormSettings& batch_norm_settings() const { return bn_; }

  // Throws ValidationError when the input does not fit the network.
  Shape4 output_shape(const Shape4& input) const;

  Tensor forward(const Tensor& x) const;
  Tensor forward_train(const Tensor& x);

  // Backpropagates through the last forward_train(). Parameter gradients are
  // accumulated unless accumulate_param_grads is false. Returns the gradient
  // with respect to the input, or an empty tensor if need_input_grad is false.
  Tensor backward(const Tensor& grad_out, bool accumulate_param_grads = true,
                  bool need_input_grad = true);

  void zero_grad();

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(std::string_view name);
  const Parameter& parameter(std::string_view name) const;

 private:
  struct LayerSlots {
    std::size_t in_channels = 0;
    std::size_t kernel = 0, bias = 0;
    std::size_t bn_scale = 0, bn_shift = 0, bn_mean = 0, bn_var = 0;
  };
  struct LayerCache {
    ConvGeometry geometry;
    Tensor normalized;  // batch-norm output (conv input); empty without batch norm
    Tensor output;
    std::vector<double> mean, inv_std, unbiased_var;
  };

  Tensor run_layer(std::size_t index, const Tensor& x, LayerCache* cache) const;

  NetworkSpec spec_;
  BatchNormSettings bn_;
  std::vector<Parameter> params_;
  std::vector<LayerSlots> slots_;
  std::vector<LayerCache> cache_;
  Tensor input_;
  bool has_cache_ = false;
};

// Kernels ~ Normal(0, 0.02^2), biases 0, batch-norm scale 1 and shift 0,
// running mean 0 and variance 1. Deterministic per seed.
void init_weights(Network& net, std::uint64_t seed);
Network make_network(const NetworkSpec& spec, std::uint64_t seed);

// Sum of squared kernel entries over parameters marked `regularized`.
double kernel_sum_of_squares(const Network& net);

}  // namespace dsgan
