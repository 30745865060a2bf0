#include "dsgan/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <new>

#define DSGAN_AVX2 __attribute__((target("avx2,fma")))

namespace dsgan::simd::avx2 {
namespace {

DSGAN_AVX2 inline double fma1(double a, double b, double c) {
  return _mm_cvtsd_f64(_mm_fmadd_sd(_mm_set_sd(a), _mm_set_sd(b), _mm_set_sd(c)));
}

DSGAN_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

DSGAN_AVX2 inline void add_store8(double* dst, __m256d lo, __m256d hi) {
  _mm256_storeu_pd(dst, _mm256_add_pd(_mm256_loadu_pd(dst), lo));
  _mm256_storeu_pd(dst + 4, _mm256_add_pd(_mm256_loadu_pd(dst + 4), hi));
}

// Rows of B[:, j0:j0+8] copied into a contiguous k x 8 panel.
DSGAN_AVX2 void pack_strip8(std::size_t k, const double* b, std::size_t ldb, double* panel) {
  for (std::size_t p = 0; p < k; ++p) {
    _mm256_store_pd(panel + 8 * p, _mm256_loadu_pd(b + p * ldb));
    _mm256_store_pd(panel + 8 * p + 4, _mm256_loadu_pd(b + p * ldb + 4));
  }
}

// 6 rows x 8 columns of C from a packed panel.
DSGAN_AVX2 void block_6x8(std::size_t k, const double* a, std::size_t lda, const double* panel,
                          double* c, std::size_t ldc) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
  __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
  __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
  __m256d c40 = _mm256_setzero_pd(), c41 = _mm256_setzero_pd();
  __m256d c50 = _mm256_setzero_pd(), c51 = _mm256_setzero_pd();
  const double* a0 = a;
  const double* a1 = a + lda;
  const double* a2 = a + 2 * lda;
  const double* a3 = a + 3 * lda;
  const double* a4 = a + 4 * lda;
  const double* a5 = a + 5 * lda;
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_load_pd(panel + 8 * p);
    const __m256d b1 = _mm256_load_pd(panel + 8 * p + 4);
    __m256d x = _mm256_broadcast_sd(a0 + p);
    c00 = _mm256_fmadd_pd(x, b0, c00);
    c01 = _mm256_fmadd_pd(x, b1, c01);
    x = _mm256_broadcast_sd(a1 + p);
    c10 = _mm256_fmadd_pd(x, b0, c10);
    c11 = _mm256_fmadd_pd(x, b1, c11);
    x = _mm256_broadcast_sd(a2 + p);
    c20 = _mm256_fmadd_pd(x, b0, c20);
    c21 = _mm256_fmadd_pd(x, b1, c21);
    x = _mm256_broadcast_sd(a3 + p);
    c30 = _mm256_fmadd_pd(x, b0, c30);
    c31 = _mm256_fmadd_pd(x, b1, c31);
    x = _mm256_broadcast_sd(a4 + p);
    c40 = _mm256_fmadd_pd(x, b0, c40);
    c41 = _mm256_fmadd_pd(x, b1, c41);
    x = _mm256_broadcast_sd(a5 + p);
    c50 = _mm256_fmadd_pd(x, b0, c50);
    c51 = _mm256_fmadd_pd(x, b1, c51);
  }
  add_store8(c, c00, c01);
  add_store8(c + ldc, c10, c11);
  add_store8(c + 2 * ldc, c20, c21);
  add_store8(c + 3 * ldc, c30, c31);
  add_store8(c + 4 * ldc, c40, c41);
  add_store8(c + 5 * ldc, c50, c51);
}

DSGAN_AVX2 void block_1x8(std::size_t k, const double* a, const double* panel, double* c) {
  __m256d c0 = _mm256_setzero_pd(), c1 = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d x = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(x, _mm256_load_pd(panel + 8 * p), c0);
    c1 = _mm256_fmadd_pd(x, _mm256_load_pd(panel + 8 * p + 4), c1);
  }
  add_store8(c, c0, c1);
}

// 1 row x 4 columns of C, B read in place.
DSGAN_AVX2 void block_1x4(std::size_t k, const double* a, const double* b, std::size_t ldb,
                          double* c) {
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p)
    acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), _mm256_loadu_pd(b + p * ldb), acc);
  _mm256_storeu_pd(c, _mm256_add_pd(_mm256_loadu_pd(c), acc));
}

DSGAN_AVX2 void block_1x1(std::size_t k, const double* a, const double* b, std::size_t ldb,
                          double* c) {
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) acc = fma1(a[p], b[p * ldb], acc);
  *c += acc;
}

struct AlignedFree {
  void operator()(double* p) const { std::free(p); }
};

double* panel_buffer(std::size_t doubles) {
  thread_local std::unique_ptr<double, AlignedFree> buffer;
  thread_local std::size_t capacity = 0;
  if (doubles > capacity) {
    const std::size_t bytes = ((doubles * sizeof(double) + 63) / 64) * 64;
    buffer.reset(static_cast<double*>(std::aligned_alloc(64, bytes)));
    if (!buffer) throw std::bad_alloc();
    capacity = doubles;
  }
  return buffer.get();
}

}  // namespace

DSGAN_AVX2 void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        std::size_t lda, const double* b, std::size_t ldb, double* c,
                        std::size_t ldc) {
  if (m == 0 || n == 0) return;
  const std::size_t n8 = n - n % 8;
  double* panel = panel_buffer(8 * kGemmKBlock);
  for (std::size_t k0 = 0; k0 < k; k0 += kGemmKBlock) {
    const std::size_t kb = std::min(kGemmKBlock, k - k0);
    const double* ak = a + k0;
    const double* bk = b + k0 * ldb;
    for (std::size_t j = 0; j < n8; j += 8) {
      pack_strip8(kb, bk + j, ldb, panel);
      std::size_t i = 0;
      for (; i + 6 <= m; i += 6) block_6x8(kb, ak + i * lda, lda, panel, c + i * ldc + j, ldc);
      for (; i < m; ++i) block_1x8(kb, ak + i * lda, panel, c + i * ldc + j);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = ak + i * lda;
      double* ci = c + i * ldc;
      std::size_t j = n8;
      for (; j + 4 <= n; j += 4) block_1x4(kb, ai, bk + j, ldb, ci + j);
      for (; j < n; ++j) block_1x1(kb, ai, bk + j, ldb, ci + j);
    }
  }
}

DSGAN_AVX2 double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s = fma1(x[i], y[i], s);
  return s;
}

DSGAN_AVX2 void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = fma1(alpha, x[i], y[i]);
}

DSGAN_AVX2 double sum(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

}  // namespace dsgan::simd::avx2

#endif
