#pragma once

// Dense double-precision inner loops used by every matrix product in the
// model. Each kernel has a portable scalar reference and, where the build
// target allows, an intrinsics variant selected once at run time.

#include <cstddef>
#include <string_view>

namespace sqlova::kernels {

enum class Isa { Scalar, Avx2, Neon };

const char* isa_name(Isa isa);

struct KernelSet {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // Row-major with explicit leading dimensions (row strides), BLAS style.
  // C[n x m] += A[n x k] * B[m x k]^T
  void (*gemm_nt)(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, std::size_t n, std::size_t k,
                  std::size_t m);
  // C[n x m] += A[n x k] * B[k x m]
  void (*gemm_nn)(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, std::size_t n, std::size_t k,
                  std::size_t m);
  // C[n x m] += A[k x n]^T * B[k x m]
  void (*gemm_tn)(const double* a, std::size_t lda, const double* b, std::size_t ldb,
                  double* c, std::size_t ldc, std::size_t n, std::size_t k,
                  std::size_t m);
};

const KernelSet& scalar_kernels();

/// Returns nullptr when the variant was not compiled in or the CPU lacks it.
const KernelSet* simd_kernels();

/// Process-wide selection. Defaults to the best supported ISA; the
/// SQLOVA_KERNELS environment variable ("scalar", "avx2", "neon") overrides.
const KernelSet& active();

/// Force a selection (tests, benchmarking). Returns false when unsupported.
bool select(Isa isa);

bool parse_isa(std::string_view name, Isa& out);

}  // namespace sqlova::kernels
