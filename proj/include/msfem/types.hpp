#pragma once

#include <array>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace msfem {

using Complex = std::complex<double>;
using Point = std::array<double, 2>;

/// Symmetric real operator on the dofs of one mesh, stored as CSR.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
/// Column-major storage for basis coefficient matrices (one column per function).
using BasisMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

using ScalarField = std::function<double(const Point&)>;
using ComplexField = std::function<Complex(const Point&)>;
using TimeFactor = std::function<double(double)>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Hamiltonian restricted to a patch is not positive definite.
class IndefiniteOperator : public Error {
 public:
  using Error::Error;
};

/// Schur complement of the constraint system is singular.
class RankDeficientConstraints : public Error {
 public:
  using Error::Error;
};

}  // namespace msfem
