#pragma once

#include "sqlova/kernels.hpp"

namespace sqlova::kernels::detail {

extern const KernelSet kScalar;

#if defined(SQLOVA_HAVE_AVX2)
extern const KernelSet kAvx2;
bool cpu_has_avx2();
#endif

#if defined(SQLOVA_HAVE_NEON)
extern const KernelSet kNeon;
#endif

}  // namespace sqlova::kernels::detail
