#include "dsgan/simd/kernels.hpp"

#include <algorithm>
#include <vector>

namespace dsgan::simd::scalar {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  // Row-wise accumulation keeps B accesses contiguous; each element still sums
  // its products in ascending k before being added to C.
  thread_local std::vector<double> acc;
  acc.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * lda;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double x = arow[p];
      const double* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) acc[j] += x * brow[j];
    }
    double* crow = c + i * ldc;
    for (std::size_t j = 0; j < n; ++j) crow[j] += acc[j];
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace dsgan::simd::scalar
