#pragma once

#include <complex>
#include <span>
#include <string_view>

namespace msfem::simd {

/// Borrowed CSR view of a real sparse matrix.
struct CsrView {
  int rows = 0;
  const int* row_ptr = nullptr;
  const int* col_idx = nullptr;
  const double* values = nullptr;
};

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(std::span<const double>, std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  /// y = A x for real A and complex x.
  void (*spmv_complex)(const CsrView&, std::span<const std::complex<double>>,
                       std::span<std::complex<double>>);
  /// Re(x^H A x) for real symmetric A.
  double (*quadratic_form)(const CsrView&, std::span<const std::complex<double>>);
};

const KernelTable& scalar_kernels();
#if defined(MSFEM_WITH_AVX2)
const KernelTable& avx2_kernels();
#endif

bool cpu_has_avx2();

/// Kernels for the running CPU. MSFEM_SIMD=scalar in the environment forces
/// the portable path.
const KernelTable& kernels();

std::string_view isa_name(Isa isa);

}  // namespace msfem::simd
