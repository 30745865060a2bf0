#pragma once

// Dense arithmetic kernels with a portable scalar reference and vectorized
// variants (AVX2+FMA or AVX-512 on x86-64, NEON on AArch64) selected at runtime.
//
// The vectorized variants compute each output element of gemm_nn as
//   for each block of kGemmKBlock consecutive k: acc = 0; acc = fma(a, b, acc)
//   (k ascending); c += acc
// using fused multiply-add for every lane and for the scalar tails, so an
// element's value never depends on which lane, tile or tail path produced it.
// Convolutions built on top are therefore bitwise translation covariant. The
// scalar reference uses one unfused chain per element and agrees up to rounding.

#include <cstddef>
#include <string_view>

namespace dsgan::simd {

inline constexpr std::size_t kGemmKBlock = 256;

enum class Isa { scalar, avx2, avx512, neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // C[m x n] += A[m x k] * B[k x n], all row-major with leading dimensions.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  std::size_t lda, const double* b, std::size_t ldb, double* c,
                  std::size_t ldc);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
};

bool isa_supported(Isa isa);

// Best ISA available on this CPU.
Isa detected_isa();

// ISA currently used by the free functions below. Defaults to detected_isa(),
// overridable with the DSGAN_ISA environment variable (scalar|avx2|avx512|neon).
Isa active_isa();

// Throws std::invalid_argument if the ISA is not supported on this CPU.
void set_active_isa(Isa isa);

const KernelTable& kernels();
const KernelTable& kernels_for(Isa isa);

inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    std::size_t lda, const double* b, std::size_t ldb, double* c,
                    std::size_t ldc) {
  kernels().gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
}
inline double dot(const double* x, const double* y, std::size_t n) {
  return kernels().dot(x, y, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  kernels().axpy(alpha, x, y, n);
}
inline double sum(const double* x, std::size_t n) { return kernels().sum(x, n); }

namespace scalar {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace avx2

namespace avx512 {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc);
}  // namespace avx512
#endif

#if defined(__aarch64__)
namespace neon {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace dsgan::simd
