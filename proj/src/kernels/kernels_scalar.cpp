#include "kernels_internal.hpp"

namespace sqlova::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * lda;
    double* ci = c + i * ldc;
    for (std::size_t j = 0; j < m; ++j) ci[j] += dot(ai, b + j * ldb, k);
  }
}

void gemm_nn(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      axpy(a[i * lda + p], b + p * ldb, ci, m);
    }
  }
}

void gemm_tn(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * ldb;
    for (std::size_t i = 0; i < n; ++i) {
      axpy(a[p * lda + i], bp, c + i * ldc, m);
    }
  }
}

}  // namespace

const KernelSet kScalar{Isa::Scalar, dot, axpy, gemm_nt, gemm_nn, gemm_tn};

}  // namespace sqlova::kernels::detail
