#include <immintrin.h>

#include "msfem/simd/kernels.hpp"

namespace msfem::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i + 4]), _mm256_loadu_pd(&y[i + 4]), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i]), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_avx2(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i])));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

// Accumulates two nonzeros per iteration; lanes hold (re, im) of each product.
inline __m128d row_times_vector(const CsrView& A, int r, const double* xd) {
  const int begin = A.row_ptr[r];
  const int end = A.row_ptr[r + 1];
  __m256d acc = _mm256_setzero_pd();
  int k = begin;
  for (; k + 2 <= end; k += 2) {
    const __m128d x0 = _mm_loadu_pd(xd + 2 * A.col_idx[k]);
    const __m128d x1 = _mm_loadu_pd(xd + 2 * A.col_idx[k + 1]);
    const __m256d xv = _mm256_set_m128d(x1, x0);
    const __m256d av = _mm256_set_pd(A.values[k + 1], A.values[k + 1], A.values[k], A.values[k]);
    acc = _mm256_fmadd_pd(av, xv, acc);
  }
  __m128d s = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
  if (k < end) {
    const __m128d x0 = _mm_loadu_pd(xd + 2 * A.col_idx[k]);
    s = _mm_fmadd_pd(_mm_set1_pd(A.values[k]), x0, s);
  }
  return s;
}

void spmv_complex_avx2(const CsrView& A, std::span<const std::complex<double>> x,
                       std::span<std::complex<double>> y) {
  const double* xd = reinterpret_cast<const double*>(x.data());
  double* yd = reinterpret_cast<double*>(y.data());
  for (int r = 0; r < A.rows; ++r) {
    _mm_storeu_pd(yd + 2 * r, row_times_vector(A, r, xd));
  }
}

double quadratic_form_avx2(const CsrView& A, std::span<const std::complex<double>> x) {
  const double* xd = reinterpret_cast<const double*>(x.data());
  __m128d total = _mm_setzero_pd();
  for (int r = 0; r < A.rows; ++r) {
    total = _mm_fmadd_pd(_mm_loadu_pd(xd + 2 * r), row_times_vector(A, r, xd), total);
  }
  return _mm_cvtsd_f64(_mm_add_sd(total, _mm_unpackhi_pd(total, total)));
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Isa::avx2, dot_avx2, axpy_avx2, spmv_complex_avx2,
                                 quadratic_form_avx2};
  return table;
}

}  // namespace msfem::simd
