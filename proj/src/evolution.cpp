#include "msfem/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "msfem/complex_ldlt.hpp"

#include "msfem/simd/kernels.hpp"

namespace msfem {
namespace {

using ComplexCsc = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

SparseMatrix symmetrized(const SparseMatrix& X) {
  SparseMatrix T = X.transpose();
  SparseMatrix out = 0.5 * (X + T);
  out.makeCompressed();
  return out;
}

SparseMatrix congruence(const SparseMatrix& X, const BasisMatrix& B) {
  const BasisMatrix XB = X * B;
  const BasisMatrix BtXB = B.transpose() * XB;
  return symmetrized(SparseMatrix(BtXB));
}

// Values of X scattered onto the union pattern.
std::vector<double> aligned_values(const SparseMatrix& pattern, const SparseMatrix& X) {
  std::vector<double> values(pattern.nonZeros(), 0.0);
  const int* outer = pattern.outerIndexPtr();
  const int* inner = pattern.innerIndexPtr();
  for (int r = 0; r < X.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(X, r); it; ++it) {
      const int* begin = inner + outer[r];
      const int* end = inner + outer[r + 1];
      const int* pos = std::lower_bound(begin, end, static_cast<int>(it.col()));
      values[pos - inner] = it.value();
    }
  }
  return values;
}

simd::CsrView view(const SparseMatrix& pattern, const double* values) {
  return {static_cast<int>(pattern.rows()), pattern.outerIndexPtr(), pattern.innerIndexPtr(), values};
}

}  // namespace

SparseMatrix CoarseSystem::hamiltonian(double t) const {
  SparseMatrix H = (0.5 * epsilon * epsilon) * S + V1;
  for (std::size_t n = 0; n < V2.size(); ++n) H += factors[n](t) * V2[n];
  return H;
}

CoarseSystem project_system(const FineOperators& ops, const BasisMatrix* basis) {
  CoarseSystem sys;
  sys.epsilon = ops.spec.epsilon;
  for (const auto& term : ops.spec.terms) sys.factors.push_back(term.time);
  if (basis == nullptr) {
    sys.M = symmetrized(ops.M);
    sys.S = symmetrized(ops.S);
    sys.V1 = symmetrized(ops.V1);
    for (const auto& V : ops.V2) sys.V2.push_back(symmetrized(V));
  } else {
    if (basis->rows() != ops.M.rows()) throw Error("project_system: basis does not live on the fine mesh");
    sys.M = congruence(ops.M, *basis);
    sys.S = congruence(ops.S, *basis);
    sys.V1 = congruence(ops.V1, *basis);
    for (const auto& V : ops.V2) sys.V2.push_back(congruence(V, *basis));
  }
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(sys.M);
  if (llt.info() != Eigen::Success) {
    throw Error("project_system: projected mass matrix is not positive definite (degenerate basis)");
  }
  return sys;
}

struct CrankNicolson::Impl {
  int n = 0;
  double epsilon = 1.0;
  SparseMatrix pattern;  // union pattern, symmetric, so CSR arrays double as CSC
  std::vector<double> m_vals, h0_vals;
  std::vector<std::vector<double>> v2_vals;
  std::vector<TimeFactor> factors;
  std::vector<double> h_vals;
  ComplexCsc lhs;
  std::optional<ComplexSymmetricLdlt> ldlt;
  Eigen::SparseLU<ComplexCsc, Eigen::COLAMDOrdering<int>> lu;  // used only if an LDL^T pivot degenerates
  bool use_lu = false;
  bool analyzed = false;
  std::optional<std::vector<double>> cached_factors;
  double cached_dt = 0.0;
  int factorizations = 0;
  int refined_steps = 0;
  FactorReuse reuse = FactorReuse::automatic;

  // Sweeps stop once the correction is at rounding level; a sweep that fails to
  // shrink the correction fourfold means the factorization is too stale.
  static constexpr int kMaxSweeps = 8;
  static constexpr double kRefineTol = 1e-15;

  bool reuse_pays() const {
    if (reuse != FactorReuse::automatic) return reuse == FactorReuse::always;
    const double sweep = 2.0 * static_cast<double>(ldlt->factor_nonzeros()) + 2.0 * static_cast<double>(pattern.nonZeros());
    return ldlt->factor_flops() > 16.0 * sweep;
  }

  // A c for A = i eps M - (dt/2) H with the current Hamiltonian values.
  Eigen::VectorXcd apply_lhs(const Eigen::VectorXcd& c, double dt) const {
    const auto& k = simd::kernels();
    const std::size_t size = static_cast<std::size_t>(n);
    Eigen::VectorXcd Mc(n), Hc(n);
    k.spmv_complex(view(pattern, m_vals.data()), {c.data(), size}, {Mc.data(), size});
    k.spmv_complex(view(pattern, h_vals.data()), {c.data(), size}, {Hc.data(), size});
    return Complex(0.0, epsilon) * Mc - (0.5 * dt) * Hc;
  }

  std::optional<Eigen::VectorXcd> refine(const Eigen::VectorXcd& rhs, double dt) const {
    Eigen::VectorXcd x = ldlt->solve(rhs);
    double previous = INFINITY;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      const Eigen::VectorXcd delta = ldlt->solve(rhs - apply_lhs(x, dt));
      x += delta;
      const double d = delta.norm();
      if (d <= kRefineTol * x.norm()) return x;
      if (d > 0.25 * previous) return std::nullopt;
      previous = d;
    }
    return std::nullopt;
  }

  void hamiltonian_values(const std::vector<double>& s) {
    h_vals = h0_vals;
    const auto& k = simd::kernels();
    for (std::size_t t = 0; t < v2_vals.size(); ++t) k.axpy(s[t], v2_vals[t], h_vals);
  }
};

CrankNicolson::CrankNicolson(const CoarseSystem& system, FactorReuse reuse) : impl_(std::make_unique<Impl>()) {
  auto& p = *impl_;
  p.reuse = reuse;
  p.n = system.dim();
  p.epsilon = system.epsilon;
  p.factors = system.factors;

  // Structural union: sum of absolute values cannot cancel.
  SparseMatrix ones = system.M.cwiseAbs() + system.S.cwiseAbs() + system.V1.cwiseAbs();
  for (const auto& V : system.V2) ones += V.cwiseAbs();
  for (int r = 0; r < p.n; ++r) ones.coeffRef(r, r) += 1.0;
  ones.makeCompressed();
  p.pattern = ones;

  p.m_vals = aligned_values(p.pattern, system.M);
  const auto s_vals = aligned_values(p.pattern, system.S);
  p.h0_vals = aligned_values(p.pattern, system.V1);
  const double half_eps2 = 0.5 * system.epsilon * system.epsilon;
  for (std::size_t i = 0; i < s_vals.size(); ++i) p.h0_vals[i] += half_eps2 * s_vals[i];
  for (const auto& V : system.V2) p.v2_vals.push_back(aligned_values(p.pattern, V));

  const int nnz = static_cast<int>(p.pattern.nonZeros());
  p.lhs.resize(p.n, p.n);
  p.lhs.resizeNonZeros(nnz);
  std::copy_n(p.pattern.outerIndexPtr(), p.n + 1, p.lhs.outerIndexPtr());
  std::copy_n(p.pattern.innerIndexPtr(), nnz, p.lhs.innerIndexPtr());
}

CrankNicolson::~CrankNicolson() = default;
CrankNicolson::CrankNicolson(CrankNicolson&&) noexcept = default;
CrankNicolson& CrankNicolson::operator=(CrankNicolson&&) noexcept = default;

int CrankNicolson::factorizations() const { return impl_->factorizations; }
int CrankNicolson::refined_steps() const { return impl_->refined_steps; }

double CrankNicolson::mass(const Eigen::VectorXcd& coeffs) const {
  const auto& p = *impl_;
  return simd::kernels().quadratic_form(view(p.pattern, p.m_vals.data()),
                                        {coeffs.data(), static_cast<std::size_t>(coeffs.size())});
}

WaveState CrankNicolson::step(const WaveState& state, double dt) {
  auto& p = *impl_;
  if (state.coeffs.size() != p.n) throw Error("cn_step: state dimension does not match the system");
  if (!(dt != 0.0) || !std::isfinite(dt)) throw std::invalid_argument("cn_step: dt must be non-zero and finite");
  const double t_mid = state.t + 0.5 * dt;
  std::vector<double> s(p.factors.size());
  for (std::size_t t = 0; t < s.size(); ++t) s[t] = p.factors[t](t_mid);
  p.hamiltonian_values(s);

  const auto& k = simd::kernels();
  const std::size_t n = static_cast<std::size_t>(p.n);
  Eigen::VectorXcd Mc(p.n), Hc(p.n);
  k.spmv_complex(view(p.pattern, p.m_vals.data()), {state.coeffs.data(), n}, {Mc.data(), n});
  k.spmv_complex(view(p.pattern, p.h_vals.data()), {state.coeffs.data(), n}, {Hc.data(), n});
  const Complex ie(0.0, p.epsilon);
  const Eigen::VectorXcd rhs = ie * Mc + (0.5 * dt) * Hc;

  const bool current = p.cached_factors && *p.cached_factors == s && p.cached_dt == dt;
  std::optional<Eigen::VectorXcd> refined;
  if (!current && p.cached_factors && p.cached_dt == dt && !p.use_lu && p.reuse_pays()) {
    refined = p.refine(rhs, dt);
    if (refined) ++p.refined_steps;
  }
  if (!current && !refined) {
    Complex* values = p.lhs.valuePtr();
    for (std::size_t i = 0; i < p.m_vals.size(); ++i) {
      values[i] = Complex(-0.5 * dt * p.h_vals[i], p.epsilon * p.m_vals[i]);
    }
    if (!p.ldlt) p.ldlt.emplace(p.pattern);
    p.use_lu = !p.ldlt->factorize(values);
    if (p.use_lu) {
      if (!p.analyzed) {
        p.lu.analyzePattern(p.lhs);
        p.analyzed = true;
      }
      p.lu.factorize(p.lhs);
      if (p.lu.info() != Eigen::Success) {
        p.cached_factors.reset();
        throw Error("cn_step: complex LU factorization failed at t=" + std::to_string(t_mid));
      }
    }
    p.cached_factors = s;
    p.cached_dt = dt;
    ++p.factorizations;
  }
  WaveState next;
  if (refined) next.coeffs = std::move(*refined);
  else next.coeffs = p.use_lu ? Eigen::VectorXcd(p.lu.solve(rhs)) : p.ldlt->solve(rhs);
  next.t = state.t + dt;
  if (!next.coeffs.allFinite()) throw Error("cn_step: non-finite coefficients at t=" + std::to_string(next.t));
  return next;
}

WaveState cn_step(const CoarseSystem& system, const WaveState& state, double dt) {
  CrankNicolson stepper(system);
  return stepper.step(state, dt);
}

int step_count(double t0, double T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const double ratio = (T - t0) / dt;
  const double rounded = std::round(ratio);
  if (ratio < -1e-9 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio))) {
    throw std::invalid_argument("(T - t0) / dt is not a non-negative integer");
  }
  return static_cast<int>(rounded);
}

EvolveResult evolve(const CoarseSystem& system, const WaveState& psi0, double dt, double T,
                    const EvolveOptions& options) {
  const int steps = step_count(psi0.t, T, dt);
  const int stride = std::max(1, options.stride);
  CrankNicolson stepper(system);
  EvolveResult result;
  result.final = psi0;
  result.steps = steps;
  const double m0 = stepper.mass(psi0.coeffs);
  auto notify = [&](int k) {
    if (options.observer) options.observer(k, result.final, reconstruct(result.final.coeffs, options.basis));
  };
  notify(0);
  for (int k = 1; k <= steps; ++k) {
    try {
      result.final = stepper.step(result.final, dt);
    } catch (const Error& e) {
      throw Error("evolve: step " + std::to_string(k) + ": " + e.what());
    }
    // Pin the clock to the grid so long runs do not drift.
    result.final.t = psi0.t + k * dt;
    if (m0 > 0.0) {
      const double dev = std::abs(stepper.mass(result.final.coeffs) - m0) / m0;
      result.max_mass_deviation = std::max(result.max_mass_deviation, dev);
    }
    if (k % stride == 0 || k == steps) notify(k);
  }
  return result;
}

WaveState project_initial_to_basis(const Eigen::VectorXcd& fine_psi0, const BasisMatrix* basis,
                                   const SparseMatrix& fine_M, double t0) {
  WaveState state;
  state.t = t0;
  if (basis == nullptr) {
    state.coeffs = fine_psi0;
    return state;
  }
  const BasisMatrix MB = fine_M * (*basis);
  const Eigen::SparseMatrix<double> G = basis->transpose() * MB;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(G);
  if (ldlt.info() != Eigen::Success) throw Error("project_initial_to_basis: degenerate basis");
  const Eigen::VectorXd re = ldlt.solve(MB.transpose() * fine_psi0.real());
  const Eigen::VectorXd im = ldlt.solve(MB.transpose() * fine_psi0.imag());
  state.coeffs = re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
  return state;
}

Eigen::VectorXcd reconstruct(const Eigen::VectorXcd& coeffs, const BasisMatrix* basis) {
  if (basis == nullptr) return coeffs;
  const Eigen::VectorXd re = *basis * coeffs.real();
  const Eigen::VectorXd im = *basis * coeffs.imag();
  return re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
}

Eigen::VectorXcd gaussian_packet(const Mesh& mesh, double sigma) {
  const double s2 = sigma * sigma;
  const double norm = std::pow(1.0 / (2.0 * std::numbers::pi * s2), 0.25 * mesh.dim);
  Eigen::VectorXcd psi(mesh.n_dofs());
  for (int i = 0; i < mesh.n_dofs(); ++i) {
    const auto& x = mesh.vertices[i];
    double r2 = (x[0] - 0.5) * (x[0] - 0.5);
    if (mesh.dim == 2) r2 += (x[1] - 0.5) * (x[1] - 0.5);
    psi[i] = norm * std::exp(-r2 / (4.0 * s2));
  }
  return psi;
}

}  // namespace msfem
