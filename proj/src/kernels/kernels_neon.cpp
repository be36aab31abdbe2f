// AArch64 always has Advanced SIMD, so no run-time probe is needed.

#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace sqlova::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) c[i * ldc + j] += dot(a + i * lda, b + j * ldb, k);
}

void gemm_nn(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * lda + p], b + p * ldb, c + i * ldc, m);
}

void gemm_tn(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < n; ++i) axpy(a[p * lda + i], b + p * ldb, c + i * ldc, m);
}

}  // namespace

const KernelSet kNeon{Isa::Neon, dot, axpy, gemm_nt, gemm_nn, gemm_tn};

}  // namespace sqlova::kernels::detail
