#include <atomic>
#include <cstdlib>

#include "kernels_internal.hpp"

namespace sqlova::kernels {

const char* isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool parse_isa(std::string_view name, Isa& out) {
  if (name == "scalar") out = Isa::Scalar;
  else if (name == "avx2") out = Isa::Avx2;
  else if (name == "neon") out = Isa::Neon;
  else return false;
  return true;
}

const KernelSet& scalar_kernels() { return detail::kScalar; }

const KernelSet* simd_kernels() {
#if defined(SQLOVA_HAVE_AVX2)
  static const bool ok = detail::cpu_has_avx2();
  return ok ? &detail::kAvx2 : nullptr;
#elif defined(SQLOVA_HAVE_NEON)
  return &detail::kNeon;
#else
  return nullptr;
#endif
}

namespace {

const KernelSet* initial_selection() {
  const KernelSet* best = simd_kernels();
  if (!best) best = &detail::kScalar;
  if (const char* env = std::getenv("SQLOVA_KERNELS")) {
    Isa want;
    if (parse_isa(env, want)) {
      if (want == Isa::Scalar) return &detail::kScalar;
      if (best->isa == want) return best;
    }
  }
  return best;
}

std::atomic<const KernelSet*>& current() {
  static std::atomic<const KernelSet*> sel{initial_selection()};
  return sel;
}

}  // namespace

const KernelSet& active() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  if (isa == Isa::Scalar) {
    current().store(&detail::kScalar);
    return true;
  }
  const KernelSet* simd = simd_kernels();
  if (!simd || simd->isa != isa) return false;
  current().store(simd);
  return true;
}

}  // namespace sqlova::kernels
