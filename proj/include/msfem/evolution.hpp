#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "msfem/msbasis.hpp"

namespace msfem {

/// Galerkin system i eps M c' = ((eps^2/2) S + V1 + sum_n s_n(t) V2_n) c.
struct CoarseSystem {
  SparseMatrix M, S, V1;
  std::vector<SparseMatrix> V2;
  std::vector<TimeFactor> factors;  // s_n, one per V2 block
  double epsilon = 1.0;

  int dim() const { return static_cast<int>(M.rows()); }
  SparseMatrix hamiltonian(double t) const;
};

/// B^T X B for every fine operator, symmetrized. basis == nullptr selects the
/// fine-identity basis (the fine system itself). Throws Error when the
/// projected mass matrix is not positive definite.
CoarseSystem project_system(const FineOperators& ops, const BasisMatrix* basis);

struct WaveState {
  Eigen::VectorXcd coeffs;
  double t = 0.0;
};

/// Crank-Nicolson stepper. All system matrices share one symmetric sparsity
/// pattern; the complex factorization is analyzed once and refactorized only
/// when the midpoint drive factors or the step size change.
/// automatic reuses a stale factorization as a preconditioner for iterative
/// refinement only when refactorizing costs far more than a triangular solve.
enum class FactorReuse { automatic, never, always };

class CrankNicolson {
 public:
  explicit CrankNicolson(const CoarseSystem& system, FactorReuse reuse = FactorReuse::automatic);
  ~CrankNicolson();
  CrankNicolson(CrankNicolson&&) noexcept;
  CrankNicolson& operator=(CrankNicolson&&) noexcept;

  /// Advances to state.t + dt with the potential frozen at state.t + dt/2.
  /// A negative dt steps backwards through the same midpoint.
  WaveState step(const WaveState& state, double dt);

  /// Re(c^H M c).
  double mass(const Eigen::VectorXcd& coeffs) const;

  int factorizations() const;
  /// Steps solved by refinement against an older factorization.
  int refined_steps() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

WaveState cn_step(const CoarseSystem& system, const WaveState& state, double dt);

/// Number of steps of size dt from t0 to T; throws unless it is an integer
/// within 1e-9.
int step_count(double t0, double T, double dt);

struct EvolveOptions {
  int stride = 64;
  /// Basis used to reconstruct fine-grid states for the observer; nullptr
  /// passes coefficients through unchanged.
  const BasisMatrix* basis = nullptr;
  /// Called at step 0, every `stride` steps and at the final step.
  std::function<void(int step, const WaveState& state, const Eigen::VectorXcd& fine)> observer;
};

struct EvolveResult {
  WaveState final;
  int steps = 0;
  double max_mass_deviation = 0.0;  // max_k |m_k - m_0| / m_0
};

EvolveResult evolve(const CoarseSystem& system, const WaveState& psi0, double dt, double T,
                    const EvolveOptions& options = {});

/// L2-optimal coefficients: (B^T M B) c = B^T M psi0. basis == nullptr returns psi0.
WaveState project_initial_to_basis(const Eigen::VectorXcd& fine_psi0, const BasisMatrix* basis,
                                   const SparseMatrix& fine_M, double t0 = 0.0);

/// Fine-grid values sum_i c_i phi_i.
Eigen::VectorXcd reconstruct(const Eigen::VectorXcd& coeffs, const BasisMatrix* basis);

/// Normalized Gaussian packet centred in the domain with width sigma.
Eigen::VectorXcd gaussian_packet(const Mesh& mesh, double sigma = 0.2);

}  // namespace msfem
