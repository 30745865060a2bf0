#include "dsgan/simd/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace dsgan::simd::neon {
namespace {

// 4 rows x 4 columns of C.
void block_4x4(std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double* c, std::size_t ldc) {
  float64x2_t acc[4][2];
  for (auto& row : acc) row[0] = row[1] = vdupq_n_f64(0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const float64x2_t b0 = vld1q_f64(b + p * ldb);
    const float64x2_t b1 = vld1q_f64(b + p * ldb + 2);
    for (std::size_t r = 0; r < 4; ++r) {
      const float64x2_t x = vdupq_n_f64(a[r * lda + p]);
      acc[r][0] = vfmaq_f64(acc[r][0], x, b0);
      acc[r][1] = vfmaq_f64(acc[r][1], x, b1);
    }
  }
  for (std::size_t r = 0; r < 4; ++r) {
    double* dst = c + r * ldc;
    vst1q_f64(dst, vaddq_f64(vld1q_f64(dst), acc[r][0]));
    vst1q_f64(dst + 2, vaddq_f64(vld1q_f64(dst + 2), acc[r][1]));
  }
}

void block_1x2(std::size_t k, const double* a, const double* b, std::size_t ldb, double* c) {
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t p = 0; p < k; ++p)
    acc = vfmaq_f64(acc, vdupq_n_f64(a[p]), vld1q_f64(b + p * ldb));
  vst1q_f64(c, vaddq_f64(vld1q_f64(c), acc));
}

void block_1x1(std::size_t k, const double* a, const double* b, std::size_t ldb, double* c) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[p], b[p * ldb], acc);
  *c += acc;
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t i = 0;
  const std::size_t n4 = n - n % 4;
  for (; i + 4 <= m; i += 4) {
    for (std::size_t j = 0; j < n4; j += 4)
      block_4x4(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    for (std::size_t r = 0; r < 4; ++r) {
      std::size_t j = n4;
      for (; j + 2 <= n; j += 2) block_1x2(k, a + (i + r) * lda, b + j, ldb, c + (i + r) * ldc + j);
      for (; j < n; ++j) block_1x1(k, a + (i + r) * lda, b + j, ldb, c + (i + r) * ldc + j);
    }
  }
  for (; i < m; ++i) {
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) block_1x2(k, a + i * lda, b + j, ldb, c + i * ldc + j);
    for (; j < n; ++j) block_1x1(k, a + i * lda, b + j, ldb, c + i * ldc + j);
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

double sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

}  // namespace dsgan::simd::neon

#endif
