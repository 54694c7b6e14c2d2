#pragma once

#include <string>
#include <vector>

#include "msfem/mesh.hpp"
#include "msfem/potential.hpp"

namespace msfem {

/// Fine-mesh P1 operators for one potential: S, M, V1 and one weighted mass
/// matrix per separable drive term.
struct FineOperators {
  Mesh mesh;
  PotentialSpec spec;
  SparseMatrix S, M, V1;
  std::vector<SparseMatrix> V2;

  /// (eps^2/2) S + V1 + sum_n s_n(t) V2_n + shift * M
  SparseMatrix hamiltonian(double t, double shift = 0.0) const;
};

FineOperators assemble_fine_operators(const Mesh& mesh, const PotentialSpec& spec);

inline constexpr int kGlobalLStar = -1;
inline constexpr int kDefaultLStar = -2;

/// ceil(log2(1/H)) for the unit domain.
int default_l_star(const Mesh& coarse);
int resolve_l_star(int requested, const Mesh& coarse);

/// Equality-constrained quadratic program min c^T Q c / 2 s.t. A c = b over the
/// active fine dofs of a patch (or of the whole domain).
struct KktSystem {
  SparseMatrix Q;
  SparseMatrix A;                        // one row per constraint vertex
  std::vector<int> active_dofs;          // fine dof of each unknown
  std::vector<int> constraint_vertices;  // coarse vertex of each row of A
};

/// Assembles constraint data shared by every patch problem on one mesh pair.
class BasisProblem {
 public:
  BasisProblem(const FineOperators& ops, const Mesh& coarse);

  /// patch == nullptr selects the global problem.
  KktSystem kkt(double t, const Patch* patch, double shift = 0.0) const;

  const FineOperators& operators() const { return *ops_; }
  const Mesh& coarse() const { return coarse_; }
  /// (M_fine I_H)^T: row j holds the measurement functional of coarse hat j.
  const SparseMatrix& measurements() const { return measurements_; }

 private:
  const FineOperators* ops_;
  Mesh coarse_;
  SparseMatrix measurements_;
  std::vector<std::vector<int>> fine_owners_;  // coarse elements containing each fine dof
};

KktSystem build_kkt(const FineOperators& ops, const Mesh& coarse, double t, const Patch* patch,
                    double shift = 0.0);

/// Minimizers c = Q^-1 A^T (A Q^-1 A^T)^-1 b for each column b of `rhs`
/// (rows indexed like A). One factorization of Q serves every column.
Eigen::MatrixXd solve_basis(const KktSystem& kkt, const Eigen::MatrixXd& rhs);

/// Minimizers for the unit right-hand sides e_i of every constraint vertex.
Eigen::MatrixXd solve_basis(const KktSystem& kkt);

struct MultiscaleBasis {
  Mesh coarse;
  Mesh fine;
  BasisMatrix functions;       // fine coefficients, one column per coarse vertex
  std::vector<Patch> patches;  // support patch per function; empty for the global basis
  double build_time = 0.0;
  int l_star = kGlobalLStar;

  int size() const { return static_cast<int>(functions.cols()); }
  bool global() const { return l_star == kGlobalLStar; }
};

struct BasisOptions {
  int l_star = kDefaultLStar;
  /// Warn when sqrt(V0) H / eps exceeds this.
  double resolution_limit = 4.0;
  /// Uniform potential shift; changes the minimizers, off unless requested.
  double shift = 0.0;
  int workers = 0;
};

struct BuildReport {
  double resolution_ratio = 0.0;
  std::vector<std::string> warnings;
};

/// sqrt(V0) H / eps for the coarse mesh.
double resolution_ratio(const PotentialSpec& spec, const Mesh& coarse);

MultiscaleBasis build_space(const FineOperators& ops, const Mesh& coarse, double t,
                            const BasisOptions& options = {}, BuildReport* report = nullptr);
MultiscaleBasis build_space(const BasisProblem& problem, double t, const BasisOptions& options = {},
                            BuildReport* report = nullptr);

/// max_ij |integral(phi_i phi^H_j) - delta_ij| evaluated with the fine mass matrix.
double biorthogonality_residual(const MultiscaleBasis& basis, const SparseMatrix& fine_M);

struct DecayProfile {
  /// ratios[i][l] = |grad phi_i|_{L2(D \ D_l)} / |grad phi_i|_{L2(D)}
  std::vector<std::vector<double>> ratios;
  std::vector<double> worst;  // max over functions per level
  double beta_hat = 0.0;      // least-squares geometric rate of `worst`
};

DecayProfile decay_profile(const MultiscaleBasis& basis, const SparseMatrix& fine_S, int max_level);

/// exp of the least-squares slope of log(values) against the level index,
/// ignoring zero entries.
double fit_geometric_rate(const std::vector<double>& values);

}  // namespace msfem
