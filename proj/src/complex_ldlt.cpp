#include "msfem/complex_ldlt.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include <Eigen/OrderingMethods>

namespace msfem {

ComplexSymmetricLdlt::ComplexSymmetricLdlt(const SparseMatrix& pattern) : n_(static_cast<int>(pattern.rows())) {
  if (pattern.rows() != pattern.cols()) throw std::invalid_argument("ComplexSymmetricLdlt: matrix must be square");
  if (!pattern.isCompressed()) throw std::invalid_argument("ComplexSymmetricLdlt: pattern must be compressed");
  const int* outer = pattern.outerIndexPtr();
  const int* inner = pattern.innerIndexPtr();

  Eigen::SparseMatrix<double, Eigen::ColMajor, int> structure(n_, n_);
  std::vector<Eigen::Triplet<double>> ones;
  ones.reserve(pattern.nonZeros());
  diag_src_.assign(n_, -1);
  for (int r = 0; r < n_; ++r) {
    for (int q = outer[r]; q < outer[r + 1]; ++q) {
      ones.emplace_back(r, inner[q], 1.0);
      if (inner[q] == r) diag_src_[r] = q;
    }
  }
  if (std::find(diag_src_.begin(), diag_src_.end(), -1) != diag_src_.end()) {
    throw std::invalid_argument("ComplexSymmetricLdlt: pattern needs a full diagonal");
  }
  structure.setFromTriplets(ones.begin(), ones.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  Eigen::AMDOrdering<int>()(structure, pinv);
  const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm = pinv.inverse();
  new_of_old_.assign(perm.indices().data(), perm.indices().data() + n_);

  // Upper triangle of P A P^T in column storage, remembering each entry's source.
  std::vector<std::array<int, 3>> entries;  // (col, row, source)
  entries.reserve(pattern.nonZeros() / 2 + n_);
  for (int r = 0; r < n_; ++r) {
    for (int q = outer[r]; q < outer[r + 1]; ++q) {
      const int nr = new_of_old_[r];
      const int nc = new_of_old_[inner[q]];
      if (nr <= nc) entries.push_back({nc, nr, q});
    }
  }
  std::sort(entries.begin(), entries.end());
  ap_ptr_.assign(n_ + 1, 0);
  for (const auto& e : entries) ++ap_ptr_[e[0] + 1];
  std::partial_sum(ap_ptr_.begin(), ap_ptr_.end(), ap_ptr_.begin());
  ap_row_.reserve(entries.size());
  ap_src_.reserve(entries.size());
  for (const auto& e : entries) {
    ap_row_.push_back(e[1]);
    ap_src_.push_back(e[2]);
  }

  // Elimination tree and column counts of L.
  parent_.assign(n_, -1);
  std::vector<int> tags(n_), counts(n_, 0);
  for (int k = 0; k < n_; ++k) {
    tags[k] = k;
    for (int p = ap_ptr_[k]; p < ap_ptr_[k + 1]; ++p) {
      for (int i = ap_row_[p]; i < k && tags[i] != k; i = parent_[i]) {
        if (parent_[i] == -1) parent_[i] = k;
        ++counts[i];
        tags[i] = k;
      }
    }
  }
  Lp_.assign(n_ + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), Lp_.begin() + 1);
  factor_flops_ = 0.0;
  for (int c : counts) factor_flops_ += static_cast<double>(c) * c;
  Li_.assign(Lp_[n_], 0);
  Lx_.assign(Lp_[n_], Complex(0.0));
  inv_D_.assign(n_, Complex(0.0));
  work_.assign(n_, Complex(0.0));
  pattern_.assign(n_, 0);
  tags_.assign(n_, 0);
  filled_.assign(n_, 0);
}

bool ComplexSymmetricLdlt::factorize(const Complex* values, double pivot_tol) {
  // Magnitudes are compared squared to stay off hypot in the hot loop.
  double scale2 = 0.0;
  for (int r = 0; r < n_; ++r) scale2 = std::max(scale2, std::norm(values[diag_src_[r]]));
  const double floor2 = pivot_tol * pivot_tol * scale2;

  auto& y = work_;
  std::fill(y.begin(), y.end(), Complex(0.0));
  std::fill(filled_.begin(), filled_.end(), 0);
  auto& pattern = pattern_;
  auto& tags = tags_;
  auto& filled = filled_;
  for (int k = 0; k < n_; ++k) {
    int top = n_;
    tags[k] = k;
    for (int p = ap_ptr_[k]; p < ap_ptr_[k + 1]; ++p) {
      int i = ap_row_[p];
      y[i] += values[ap_src_[p]];
      int len = 0;
      for (; tags[i] != k; i = parent_[i]) {
        pattern[len++] = i;
        tags[i] = k;
      }
      while (len > 0) pattern[--top] = pattern[--len];
    }
    Complex d = y[k];
    y[k] = 0.0;
    for (; top < n_; ++top) {
      const int i = pattern[top];
      const Complex yi = y[i];
      y[i] = 0.0;
      const Complex l_ki = yi * inv_D_[i];
      const int end = Lp_[i] + filled[i];
      for (int p = Lp_[i]; p < end; ++p) y[Li_[p]] -= Lx_[p] * yi;
      d -= l_ki * yi;
      Li_[end] = k;
      Lx_[end] = l_ki;
      ++filled[i];
    }
    const double d2 = std::norm(d);
    if (!(d2 > floor2)) return false;
    inv_D_[k] = std::conj(d) / d2;
  }
  return true;
}

Eigen::VectorXcd ComplexSymmetricLdlt::solve(const Eigen::VectorXcd& b) const {
  auto& x = work_;
  for (int i = 0; i < n_; ++i) x[new_of_old_[i]] = b[i];
  for (int j = 0; j < n_; ++j) {
    const Complex xj = x[j];
    for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) x[Li_[p]] -= Lx_[p] * xj;
  }
  for (int j = 0; j < n_; ++j) x[j] *= inv_D_[j];
  for (int j = n_ - 1; j >= 0; --j) {
    Complex s = x[j];
    for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) s -= Lx_[p] * x[Li_[p]];
    x[j] = s;
  }
  Eigen::VectorXcd out(n_);
  for (int i = 0; i < n_; ++i) out[i] = x[new_of_old_[i]];
  return out;
}

}  // namespace msfem
