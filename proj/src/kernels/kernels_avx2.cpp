// Built with -mavx2 -mfma; only reached after a run-time CPU check.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace sqlova::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four output columns at a time so each A row load feeds four FMAs.
void gemm_nt(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * lda;
    double* ci = c + i * ldc;
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const double* b0 = b + j * ldb;
      const double* b1 = b0 + ldb;
      const double* b2 = b1 + ldb;
      const double* b3 = b2 + ldb;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d va = _mm256_loadu_pd(ai + p);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; p < k; ++p) {
        r0 += ai[p] * b0[p];
        r1 += ai[p] * b1[p];
        r2 += ai[p] * b2[p];
        r3 += ai[p] * b3[p];
      }
      ci[j] += r0;
      ci[j + 1] += r1;
      ci[j + 2] += r2;
      ci[j + 3] += r3;
    }
    for (; j < m; ++j) ci[j] += dot(ai, b + j * ldb, k);
  }
}

// Rank-4 update of one C row per pass over B.
void gemm_nn(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * lda;
    double* ci = c + i * ldc;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const __m256d a0 = _mm256_set1_pd(ai[p]);
      const __m256d a1 = _mm256_set1_pd(ai[p + 1]);
      const __m256d a2 = _mm256_set1_pd(ai[p + 2]);
      const __m256d a3 = _mm256_set1_pd(ai[p + 3]);
      const double* b0 = b + p * ldb;
      const double* b1 = b0 + ldb;
      const double* b2 = b1 + ldb;
      const double* b3 = b2 + ldb;
      std::size_t j = 0;
      for (; j + 4 <= m; j += 4) {
        __m256d vc = _mm256_loadu_pd(ci + j);
        vc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), vc);
        vc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), vc);
        vc = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b2 + j), vc);
        vc = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b3 + j), vc);
        _mm256_storeu_pd(ci + j, vc);
      }
      for (; j < m; ++j)
        ci[j] += ai[p] * b0[j] + ai[p + 1] * b1[j] + ai[p + 2] * b2[j] +
                 ai[p + 3] * b3[j];
    }
    for (; p < k; ++p) axpy(ai[p], b + p * ldb, ci, m);
  }
}

void gemm_tn(const double* a, std::size_t lda, const double* b,
             std::size_t ldb, double* c, std::size_t ldc, std::size_t n,
             std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * ldc;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const __m256d a0 = _mm256_set1_pd(a[p * lda + i]);
      const __m256d a1 = _mm256_set1_pd(a[(p + 1) * lda + i]);
      const __m256d a2 = _mm256_set1_pd(a[(p + 2) * lda + i]);
      const __m256d a3 = _mm256_set1_pd(a[(p + 3) * lda + i]);
      const double* b0 = b + p * ldb;
      const double* b1 = b0 + ldb;
      const double* b2 = b1 + ldb;
      const double* b3 = b2 + ldb;
      std::size_t j = 0;
      for (; j + 4 <= m; j += 4) {
        __m256d vc = _mm256_loadu_pd(ci + j);
        vc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), vc);
        vc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), vc);
        vc = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b2 + j), vc);
        vc = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b3 + j), vc);
        _mm256_storeu_pd(ci + j, vc);
      }
      for (; j < m; ++j)
        ci[j] += a[p * lda + i] * b0[j] + a[(p + 1) * lda + i] * b1[j] +
                 a[(p + 2) * lda + i] * b2[j] + a[(p + 3) * lda + i] * b3[j];
    }
    for (; p < k; ++p) axpy(a[p * lda + i], b + p * ldb, ci, m);
  }
}

}  // namespace

const KernelSet kAvx2{Isa::Avx2, dot, axpy, gemm_nt, gemm_nn, gemm_tn};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

}  // namespace sqlova::kernels::detail
