#include "dsgan/models/conv.hpp"

#include <algorithm>
#include <vector>

#include "dsgan/core/error.hpp"
#include "dsgan/simd/kernels.hpp"

namespace dsgan {
namespace {

// Upper bound on doubles held by one im2col chunk.
constexpr std::size_t kChunkDoubles = std::size_t{1} << 19;

std::size_t rows_per_chunk(std::size_t patch, std::size_t row_width) {
  return std::max<std::size_t>(1, kChunkDoubles / std::max<std::size_t>(1, patch * row_width));
}

long floor_mod(long a, long m) { return ((a % m) + m) % m; }

// cols[k][p] for output rows [r0, r1), k = (c*kh + ky)*kw + kx, p = (r - r0)*out_w + q.
void im2col(const ConvGeometry& g, const double* x, std::size_t r0, std::size_t r1, double* cols) {
  const std::size_t np = (r1 - r0) * g.out_w;
  const long s = static_cast<long>(g.stride), d = static_cast<long>(g.dilation);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const double* xc = x + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        double* row = cols + ((c * g.kernel_h + ky) * g.kernel_w + kx) * np;
        for (std::size_t r = r0; r < r1; ++r) {
          double* dst = row + (r - r0) * g.out_w;
          const long iy = static_cast<long>(r) * s - g.pad_top + static_cast<long>(ky) * d;
          if (iy < 0 || iy >= static_cast<long>(g.in_h)) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = xc + iy * static_cast<long>(g.in_w);
          // Output columns whose input column lies inside the row.
          const long first = static_cast<long>(kx) * d - g.pad_left;
          const long q_lo = first >= 0 ? 0 : (-first + s - 1) / s;
          const long last_ok = static_cast<long>(g.in_w) - 1 - first;
          const long q_hi = last_ok < 0 ? 0 : std::min(static_cast<long>(g.out_w), last_ok / s + 1);
          if (q_hi <= q_lo) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          std::fill(dst, dst + q_lo, 0.0);
          if (s == 1) {
            std::copy(src + first + q_lo, src + first + q_hi, dst + q_lo);
          } else {
            for (long q = q_lo; q < q_hi; ++q) dst[q] = src[q * s + first];
          }
          std::fill(dst + q_hi, dst + g.out_w, 0.0);
        }
      }
  }
}

// Transposed layout of im2col: colsT[p][k].
void im2col_transposed(const ConvGeometry& g, const double* x, std::size_t r0, std::size_t r1,
                       double* cols_t) {
  const std::size_t k_total = g.patch();
  const long s = static_cast<long>(g.stride), d = static_cast<long>(g.dilation);
  for (std::size_t r = r0; r < r1; ++r)
    for (std::size_t q = 0; q < g.out_w; ++q) {
      double* dst = cols_t + ((r - r0) * g.out_w + q) * k_total;
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const double* xc = x + c * g.in_h * g.in_w;
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const long iy = static_cast<long>(r) * s - g.pad_top + static_cast<long>(ky) * d;
          const bool row_ok = iy >= 0 && iy < static_cast<long>(g.in_h);
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const long ix = static_cast<long>(q) * s - g.pad_left + static_cast<long>(kx) * d;
            *dst++ = (row_ok && ix >= 0 && ix < static_cast<long>(g.in_w))
                         ? xc[iy * static_cast<long>(g.in_w) + ix]
                         : 0.0;
          }
        }
      }
    }
}

struct Tap {
  std::size_t k;
  long offset;
};

// Kernel taps that reach input coordinates congruent to `phase` mod stride,
// with the output offset they read from: out = m + offset for input phase + stride*m.
std::vector<Tap> phase_taps(std::size_t phase, long pad, std::size_t kernel, std::size_t stride,
                            std::size_t dilation) {
  std::vector<Tap> taps;
  const long s = static_cast<long>(stride);
  for (std::size_t k = 0; k < kernel; ++k) {
    const long num = static_cast<long>(phase) + pad - static_cast<long>(k * dilation);
    if (floor_mod(num, s) == 0) taps.push_back({k, (num - floor_mod(num, s)) / s});
  }
  return taps;
}

}  // namespace

ConvGeometry same_conv_geometry(std::size_t in_channels, std::size_t in_h, std::size_t in_w,
                                std::size_t out_channels, std::size_t kernel_h,
                                std::size_t kernel_w, std::size_t stride, std::size_t dilation) {
  if (stride == 0 || dilation == 0 || kernel_h == 0 || kernel_w == 0)
    throw ValidationError("convolution stride, dilation and kernel must be >= 1");
  ConvGeometry g;
  g.in_channels = in_channels;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_channels = out_channels;
  g.kernel_h = kernel_h;
  g.kernel_w = kernel_w;
  g.stride = stride;
  g.dilation = dilation;
  g.out_h = (in_h + stride - 1) / stride;
  g.out_w = (in_w + stride - 1) / stride;
  const auto total_pad = [&](std::size_t in, std::size_t out, std::size_t k) {
    const long need = static_cast<long>((out - 1) * stride + 1 + (k - 1) * dilation) -
                      static_cast<long>(in);
    return std::max(need, 0L);
  };
  g.pad_top = total_pad(in_h, g.out_h, kernel_h) / 2;
  g.pad_left = total_pad(in_w, g.out_w, kernel_w) / 2;
  return g;
}

ConvGeometry transposed_conv_geometry(std::size_t in_channels, std::size_t in_h,
                                      std::size_t in_w, std::size_t out_channels,
                                      std::size_t kernel_h, std::size_t kernel_w,
                                      std::size_t stride) {
  return same_conv_geometry(out_channels, in_h * stride, in_w * stride, in_channels, kernel_h,
                            kernel_w, stride, 1);
}

ConvGeometry layer_geometry(const LayerSpec& layer, std::size_t in_channels, std::size_t in_h,
                            std::size_t in_w) {
  if (layer.kind == LayerKind::deconv)
    return transposed_conv_geometry(in_channels, in_h, in_w, layer.filters, layer.kernel_h,
                                    layer.kernel_w, layer.stride);
  return same_conv_geometry(in_channels, in_h, in_w, layer.filters, layer.kernel_h,
                            layer.kernel_w, layer.stride, layer.dilation);
}

void conv_forward(const ConvGeometry& g, const double* x, const double* w, double* y) {
  const std::size_t k_total = g.patch();
  const std::size_t chunk = rows_per_chunk(k_total, g.out_w);
  const std::size_t out_plane = g.out_h * g.out_w;
  std::vector<double> cols(k_total * std::min(chunk, g.out_h) * g.out_w);
  for (std::size_t r0 = 0; r0 < g.out_h; r0 += chunk) {
    const std::size_t r1 = std::min(g.out_h, r0 + chunk);
    const std::size_t np = (r1 - r0) * g.out_w;
    im2col(g, x, r0, r1, cols.data());
    simd::gemm_nn(g.out_channels, np, k_total, w, k_total, cols.data(), np, y + r0 * g.out_w,
                  out_plane);
  }
}

void conv_backward_weights(const ConvGeometry& g, const double* x, const double* dy, double* dw) {
  const std::size_t k_total = g.patch();
  const std::size_t chunk = rows_per_chunk(k_total, g.out_w);
  const std::size_t out_plane = g.out_h * g.out_w;
  std::vector<double> cols_t(k_total * std::min(chunk, g.out_h) * g.out_w);
  for (std::size_t r0 = 0; r0 < g.out_h; r0 += chunk) {
    const std::size_t r1 = std::min(g.out_h, r0 + chunk);
    const std::size_t np = (r1 - r0) * g.out_w;
    im2col_transposed(g, x, r0, r1, cols_t.data());
    simd::gemm_nn(g.out_channels, k_total, np, dy + r0 * g.out_w, out_plane, cols_t.data(),
                  k_total, dw, k_total);
  }
}

// Gathers per stride phase so that every dx element is produced by one
// accumulator chain; no scatter-add ordering depends on its position.
void conv_backward_data(const ConvGeometry& g, const double* dy, const double* w, double* dx) {
  const std::size_t s = g.stride;
  for (std::size_t py = 0; py < std::min(s, g.in_h); ++py) {
    const auto taps_y = phase_taps(py, g.pad_top, g.kernel_h, s, g.dilation);
    if (taps_y.empty()) continue;
    const std::size_t rows = (g.in_h - py + s - 1) / s;
    for (std::size_t px = 0; px < std::min(s, g.in_w); ++px) {
      const auto taps_x = phase_taps(px, g.pad_left, g.kernel_w, s, g.dilation);
      if (taps_x.empty()) continue;
      const std::size_t cols_w = (g.in_w - px + s - 1) / s;
      const std::size_t k_total = g.out_channels * taps_y.size() * taps_x.size();

      // wp[c][(o, ty, tx)]
      std::vector<double> wp(g.in_channels * k_total);
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        double* dst = wp.data() + c * k_total;
        for (std::size_t o = 0; o < g.out_channels; ++o)
          for (const Tap& ty : taps_y)
            for (const Tap& tx : taps_x)
              *dst++ = w[((o * g.in_channels + c) * g.kernel_h + ty.k) * g.kernel_w + tx.k];
      }

      const std::size_t chunk = rows_per_chunk(k_total, cols_w);
      std::vector<double> cols(k_total * std::min(chunk, rows) * cols_w);
      std::vector<double> out(g.in_channels * std::min(chunk, rows) * cols_w);
      for (std::size_t m0 = 0; m0 < rows; m0 += chunk) {
        const std::size_t m1 = std::min(rows, m0 + chunk);
        const std::size_t np = (m1 - m0) * cols_w;
        double* col = cols.data();
        for (std::size_t o = 0; o < g.out_channels; ++o) {
          const double* dyo = dy + o * g.out_h * g.out_w;
          for (const Tap& ty : taps_y)
            for (const Tap& tx : taps_x) {
              for (std::size_t m = m0; m < m1; ++m) {
                const long r = static_cast<long>(m) + ty.offset;
                const bool row_ok = r >= 0 && r < static_cast<long>(g.out_h);
                for (std::size_t n = 0; n < cols_w; ++n) {
                  const long q = static_cast<long>(n) + tx.offset;
                  *col++ = (row_ok && q >= 0 && q < static_cast<long>(g.out_w))
                               ? dyo[r * static_cast<long>(g.out_w) + q]
                               : 0.0;
                }
              }
            }
        }
        std::fill(out.begin(), out.begin() + g.in_channels * np, 0.0);
        simd::gemm_nn(g.in_channels, np, k_total, wp.data(), k_total, cols.data(), np, out.data(),
                      np);
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          double* dxc = dx + c * g.in_h * g.in_w;
          const double* src = out.data() + c * np;
          for (std::size_t m = m0; m < m1; ++m)
            for (std::size_t n = 0; n < cols_w; ++n)
              dxc[(py + s * m) * g.in_w + px + s * n] += src[(m - m0) * cols_w + n];
        }
      }
    }
  }
}

}  // namespace dsgan
