#pragma once

#include <cstddef>

#include "dsgan/models/layer_spec.hpp"

namespace dsgan {

// Geometry of a strided, dilated 2D cross-correlation from
// (in_channels, in_h, in_w) to (out_channels, out_h, out_w):
//   y[o][r][q] = sum_{c,ky,kx} w[o][c][ky][kx] * x[c][r*stride - pad_top + ky*dilation]
//                                                   [q*stride - pad_left + kx*dilation]
// with out-of-range reads contributing zero. Weights are row-major
// (out_channels, in_channels, kernel_h, kernel_w).
struct ConvGeometry {
  std::size_t in_channels = 0, in_h = 0, in_w = 0;
  std::size_t out_channels = 0, out_h = 0, out_w = 0;
  std::size_t kernel_h = 1, kernel_w = 1, stride = 1, dilation = 1;
  long pad_top = 0, pad_left = 0;

  std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
  std::size_t weight_count() const { return out_channels * patch(); }
  std::size_t in_size() const { return in_channels * in_h * in_w; }
  std::size_t out_size() const { return out_channels * out_h * out_w; }
};

// "Same" padding: out = ceil(in / stride), padding split with the extra pixel
// after (matches the TensorFlow convention).
ConvGeometry same_conv_geometry(std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                                std::size_t out_channels, std::size_t kernel_h,
                                std::size_t kernel_w, std::size_t stride, std::size_t dilation);

// A transposed convolution from (in_channels, h, w) to (out_channels, h*s, w*s)
// is the adjoint of the same-padded conv (out_channels, h*s, w*s) -> (in_channels, h, w).
// This returns that conv's geometry; its weights are (in_channels, out_channels, kh, kw).
ConvGeometry transposed_conv_geometry(std::size_t in_channels, std::size_t in_h,
                                      std::size_t in_w, std::size_t out_channels,
                                      std::size_t kernel_h, std::size_t kernel_w,
                                      std::size_t stride);

// Geometry of one layer given its input size. For deconv layers this is the
// adjoint conv (see transposed_conv_geometry).
ConvGeometry layer_geometry(const LayerSpec& layer, std::size_t in_channels, std::size_t in_h,
                            std::size_t in_w);

// Single-sample kernels. All output buffers are accumulated into (+=).
// y (out_size) += conv(x (in_size), w)
void conv_forward(const ConvGeometry& g, const double* x, const double* w, double* y);
// dx (in_size) += conv^T(dy (out_size), w)
void conv_backward_data(const ConvGeometry& g, const double* dy, const double* w, double* dx);
// dw (weight_count) += d/dw <dy, conv(x, w)>
void conv_backward_weights(const ConvGeometry& g, const double* x, const double* dy, double* dw);

}  // namespace dsgan
