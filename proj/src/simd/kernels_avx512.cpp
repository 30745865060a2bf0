#include "dsgan/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cstdlib>
#include <memory>
#include <new>

#define DSGAN_AVX512 __attribute__((target("avx512f,avx2,fma")))

namespace dsgan::simd::avx512 {
namespace {

DSGAN_AVX512 inline double fma1(double a, double b, double c) {
  return _mm_cvtsd_f64(_mm_fmadd_sd(_mm_set_sd(a), _mm_set_sd(b), _mm_set_sd(c)));
}

DSGAN_AVX512 inline void add_store16(double* dst, __m512d lo, __m512d hi) {
  _mm512_storeu_pd(dst, _mm512_add_pd(_mm512_loadu_pd(dst), lo));
  _mm512_storeu_pd(dst + 8, _mm512_add_pd(_mm512_loadu_pd(dst + 8), hi));
}

DSGAN_AVX512 void pack_strip16(std::size_t k, const double* b, std::size_t ldb, double* panel) {
  for (std::size_t p = 0; p < k; ++p) {
    _mm512_store_pd(panel + 16 * p, _mm512_loadu_pd(b + p * ldb));
    _mm512_store_pd(panel + 16 * p + 8, _mm512_loadu_pd(b + p * ldb + 8));
  }
}

template <int Rows>
DSGAN_AVX512 void block_rx16(std::size_t k, const double* a, std::size_t lda, const double* panel,
                             double* c, std::size_t ldc) {
  __m512d lo[Rows], hi[Rows];
  for (int r = 0; r < Rows; ++r) lo[r] = hi[r] = _mm512_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m512d b0 = _mm512_load_pd(panel + 16 * p);
    const __m512d b1 = _mm512_load_pd(panel + 16 * p + 8);
    for (int r = 0; r < Rows; ++r) {
      const __m512d x = _mm512_set1_pd(a[r * lda + p]);
      lo[r] = _mm512_fmadd_pd(x, b0, lo[r]);
      hi[r] = _mm512_fmadd_pd(x, b1, hi[r]);
    }
  }
  for (int r = 0; r < Rows; ++r) add_store16(c + r * ldc, lo[r], hi[r]);
}

DSGAN_AVX512 void block_1x8(std::size_t k, const double* a, const double* b, std::size_t ldb,
                            double* c) {
  __m512d acc = _mm512_setzero_pd();
  for (std::size_t p = 0; p < k; ++p)
    acc = _mm512_fmadd_pd(_mm512_set1_pd(a[p]), _mm512_loadu_pd(b + p * ldb), acc);
  _mm512_storeu_pd(c, _mm512_add_pd(_mm512_loadu_pd(c), acc));
}

DSGAN_AVX512 void block_1x1(std::size_t k, const double* a, const double* b, std::size_t ldb,
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

DSGAN_AVX512 void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
                          std::size_t lda, const double* b, std::size_t ldb, double* c,
                          std::size_t ldc) {
  if (m == 0 || n == 0) return;
  const std::size_t n16 = n - n % 16;
  double* panel = panel_buffer(16 * kGemmKBlock);
  for (std::size_t k0 = 0; k0 < k; k0 += kGemmKBlock) {
    const std::size_t kb = std::min(kGemmKBlock, k - k0);
    const double* ak = a + k0;
    const double* bk = b + k0 * ldb;
    for (std::size_t j = 0; j < n16; j += 16) {
      pack_strip16(kb, bk + j, ldb, panel);
      std::size_t i = 0;
      for (; i + 8 <= m; i += 8) block_rx16<8>(kb, ak + i * lda, lda, panel, c + i * ldc + j, ldc);
      for (; i + 4 <= m; i += 4) block_rx16<4>(kb, ak + i * lda, lda, panel, c + i * ldc + j, ldc);
      for (; i < m; ++i) block_rx16<1>(kb, ak + i * lda, lda, panel, c + i * ldc + j, ldc);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = ak + i * lda;
      double* ci = c + i * ldc;
      std::size_t j = n16;
      for (; j + 8 <= n; j += 8) block_1x8(kb, ai, bk + j, ldb, ci + j);
      for (; j < n; ++j) block_1x1(kb, ai, bk + j, ldb, ci + j);
    }
  }
}

}  // namespace dsgan::simd::avx512

#endif
