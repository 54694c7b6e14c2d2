#include "msfem/simd/kernels.hpp"

namespace msfem::simd {
namespace {

double dot_scalar(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void spmv_complex_scalar(const CsrView& A, std::span<const std::complex<double>> x,
                         std::span<std::complex<double>> y) {
  for (int r = 0; r < A.rows; ++r) {
    double re = 0.0, im = 0.0;
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
      const auto& v = x[A.col_idx[k]];
      re += A.values[k] * v.real();
      im += A.values[k] * v.imag();
    }
    y[r] = {re, im};
  }
}

double quadratic_form_scalar(const CsrView& A, std::span<const std::complex<double>> x) {
  double total = 0.0;
  for (int r = 0; r < A.rows; ++r) {
    double re = 0.0, im = 0.0;
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
      const auto& v = x[A.col_idx[k]];
      re += A.values[k] * v.real();
      im += A.values[k] * v.imag();
    }
    total += x[r].real() * re + x[r].imag() * im;
  }
  return total;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, dot_scalar, axpy_scalar, spmv_complex_scalar,
                                 quadratic_form_scalar};
  return table;
}

}  // namespace msfem::simd
