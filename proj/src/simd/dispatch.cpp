#include <cstdlib>
#include <string>

#include "msfem/simd/kernels.hpp"

namespace msfem::simd {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& kernels() {
  static const KernelTable& selected = []() -> const KernelTable& {
    const char* forced = std::getenv("MSFEM_SIMD");
    if (forced != nullptr && std::string(forced) == "scalar") return scalar_kernels();
#if defined(MSFEM_WITH_AVX2)
    if (cpu_has_avx2()) return avx2_kernels();
#endif
    return scalar_kernels();
  }();
  return selected;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace msfem::simd
