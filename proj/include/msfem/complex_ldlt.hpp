#pragma once

#include <vector>

#include "msfem/types.hpp"

namespace msfem {

/// Sparse L D L^T factorization of a complex symmetric (not Hermitian) matrix
/// without pivoting. It exists whenever the imaginary part is positive
/// definite, which holds for every Crank-Nicolson matrix i eps M - (dt/2) H.
///
/// The pattern is fixed at construction (AMD fill-reducing order); each
/// factorize() reads values positionally from an array aligned with that
/// pattern's CSR storage.
class ComplexSymmetricLdlt {
 public:
  /// `pattern` must be structurally symmetric with a full diagonal.
  explicit ComplexSymmetricLdlt(const SparseMatrix& pattern);

  /// Returns false when a pivot falls below `pivot_tol` times the largest
  /// diagonal magnitude; the factorization is then unusable.
  bool factorize(const Complex* values, double pivot_tol = 1e-13);

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;

  int size() const { return n_; }
  long factor_nonzeros() const { return static_cast<long>(Li_.size()); }
  /// Complex multiply-adds of one factorize(), from the symbolic column counts.
  double factor_flops() const { return factor_flops_; }

 private:
  int n_ = 0;
  double factor_flops_ = 0.0;
  std::vector<int> new_of_old_;
  std::vector<int> ap_ptr_, ap_row_, ap_src_;  // permuted upper triangle, by column
  std::vector<int> diag_src_;                  // value index of each original diagonal entry
  std::vector<int> parent_, Lp_, Li_;
  std::vector<Complex> Lx_, inv_D_;
  mutable std::vector<Complex> work_;
  std::vector<int> pattern_, tags_, filled_;
};

}  // namespace msfem
