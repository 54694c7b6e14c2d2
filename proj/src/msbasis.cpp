#include "msfem/msbasis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "msfem/fem_assembly.hpp"
#include "msfem/parallel.hpp"

namespace msfem {

SparseMatrix FineOperators::hamiltonian(double t, double shift) const {
  const double eps = spec.epsilon;
  SparseMatrix H = (0.5 * eps * eps) * S + V1;
  for (std::size_t n = 0; n < V2.size(); ++n) H += spec.terms[n].time(t) * V2[n];
  if (shift != 0.0) H += shift * M;
  return H;
}

FineOperators assemble_fine_operators(const Mesh& mesh, const PotentialSpec& spec) {
  if (mesh.dim != spec.dim) {
    throw std::invalid_argument("potential dimension does not match the mesh");
  }
  FineOperators ops;
  ops.mesh = mesh;
  ops.spec = spec;
  ops.S = assemble_stiffness(mesh);
  ops.M = assemble_mass(mesh);
  ops.V1 = assemble_potential(mesh, spec.v1);
  for (const auto& term : spec.terms) ops.V2.push_back(assemble_potential(mesh, term.space));
  return ops;
}

int default_l_star(const Mesh& coarse) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(coarse.n)) - 1e-12));
}

int resolve_l_star(int requested, const Mesh& coarse) {
  if (requested == kDefaultLStar) return default_l_star(coarse);
  if (requested < kGlobalLStar) throw std::invalid_argument("invalid localization level");
  return requested;
}

BasisProblem::BasisProblem(const FineOperators& ops, const Mesh& coarse)
    : ops_(&ops), coarse_(coarse) {
  refinement_ratio(ops.mesh, coarse);
  const SparseMatrix P = coarse_to_fine_interpolation(ops.mesh, coarse);
  measurements_ = SparseMatrix((ops.M * P).transpose());
  measurements_.makeCompressed();
  fine_owners_.resize(ops.mesh.n_dofs());
  for (int s = 0; s < ops.mesh.n_dofs(); ++s) {
    fine_owners_[s] = coarse_elements_containing(ops.mesh, coarse, s);
  }
}

KktSystem BasisProblem::kkt(double t, const Patch* patch, double shift) const {
  const FineOperators& ops = *ops_;
  const int n_fine = ops.mesh.n_dofs();
  KktSystem sys;
  if (patch == nullptr) {
    sys.active_dofs.resize(n_fine);
    for (int s = 0; s < n_fine; ++s) sys.active_dofs[s] = s;
  } else {
    std::vector<char> member(coarse_.n_elements(), 0);
    for (int e : patch->element_ids) member[e] = 1;
    for (int s = 0; s < n_fine; ++s) {
      bool inside = true;
      for (int e : fine_owners_[s]) inside = inside && member[e];
      if (inside) sys.active_dofs.push_back(s);
    }
  }
  std::vector<int> local(n_fine, -1);
  for (std::size_t k = 0; k < sys.active_dofs.size(); ++k) local[sys.active_dofs[k]] = static_cast<int>(k);

  const SparseMatrix H = ops.hamiltonian(t, shift);
  std::vector<Eigen::Triplet<double>> q_entries;
  q_entries.reserve(sys.active_dofs.size() * (ops.mesh.dim == 1 ? 3 : 7));
  for (std::size_t k = 0; k < sys.active_dofs.size(); ++k) {
    for (SparseMatrix::InnerIterator it(H, sys.active_dofs[k]); it; ++it) {
      const int c = local[it.col()];
      if (c >= 0) q_entries.emplace_back(static_cast<int>(k), c, it.value());
    }
  }
  const int n_active = static_cast<int>(sys.active_dofs.size());
  sys.Q = SparseMatrix(n_active, n_active);
  sys.Q.setFromTriplets(q_entries.begin(), q_entries.end());
  sys.Q.makeCompressed();

  std::vector<Eigen::Triplet<double>> a_entries;
  for (int j = 0; j < coarse_.n_dofs(); ++j) {
    bool touches = false;
    for (SparseMatrix::InnerIterator it(measurements_, j); it; ++it) {
      if (local[it.col()] >= 0 && it.value() != 0.0) {
        touches = true;
        break;
      }
    }
    if (!touches) continue;
    const int row = static_cast<int>(sys.constraint_vertices.size());
    sys.constraint_vertices.push_back(j);
    for (SparseMatrix::InnerIterator it(measurements_, j); it; ++it) {
      const int c = local[it.col()];
      if (c >= 0) a_entries.emplace_back(row, c, it.value());
    }
  }
  sys.A = SparseMatrix(static_cast<int>(sys.constraint_vertices.size()), n_active);
  sys.A.setFromTriplets(a_entries.begin(), a_entries.end());
  sys.A.makeCompressed();
  return sys;
}

KktSystem build_kkt(const FineOperators& ops, const Mesh& coarse, double t, const Patch* patch,
                    double shift) {
  return BasisProblem(ops, coarse).kkt(t, patch, shift);
}

Eigen::MatrixXd solve_basis(const KktSystem& kkt, const Eigen::MatrixXd& rhs) {
  if (rhs.rows() != kkt.A.rows()) throw std::invalid_argument("solve_basis: rhs rows != constraints");
  // Pivots below this fraction of the largest count as a failed factorization,
  // so a semidefinite Q does not slip through on roundoff.
  constexpr double kPivotFloor = 1e-12;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor;
  auto factor_pd = [&](const Eigen::SparseMatrix<double>& Q) {
    factor.compute(Q);
    if (factor.info() != Eigen::Success) return false;
    const Eigen::VectorXd& d = factor.vectorD();
    return d.size() == 0 || d.minCoeff() > kPivotFloor * d.cwiseAbs().maxCoeff();
  };
  if (!factor_pd(kkt.Q)) {
    // Q may be indefinite while the constrained problem is still convex (Q PD on
    // ker A). Adding rho A^T A leaves the minimizer unchanged because c^T A^T A c
    // = |b|^2 on the feasible set; only a genuinely non-convex problem fails.
    const Eigen::SparseMatrix<double> A = kkt.A;
    const Eigen::SparseMatrix<double> AtA = Eigen::SparseMatrix<double>(A.transpose()) * A;
    const double q_scale = Eigen::VectorXd(kkt.Q.diagonal()).cwiseAbs().maxCoeff();
    const double a_scale = std::max(Eigen::VectorXd(AtA.diagonal()).maxCoeff(), 1e-300);
    bool convex = false;
    for (double rho = q_scale / a_scale; !convex && rho <= 1e6 * q_scale / a_scale; rho *= 10.0) {
      convex = factor_pd(Eigen::SparseMatrix<double>(kkt.Q) + rho * AtA);
    }
    if (!convex) {
      throw IndefiniteOperator(
          "Hamiltonian restricted to " + std::to_string(kkt.Q.rows()) +
          " active fine dofs is not positive definite on the constraint kernel; refine the fine "
          "mesh (h << eps) or check that sqrt(V0) H / eps stays O(1)");
    }
  }
  const Eigen::MatrixXd At = Eigen::MatrixXd(kkt.A.transpose());
  const Eigen::MatrixXd Y = factor.solve(At);
  Eigen::MatrixXd schur = kkt.A * Y;
  schur = 0.5 * (schur + schur.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> schur_factor(schur);
  if (schur_factor.info() != Eigen::Success || schur_factor.rcond() < 1e-14) {
    throw RankDeficientConstraints(
        "constraint Schur complement is singular (" + std::to_string(schur.rows()) +
        " constraints); increase the localization level l*");
  }
  return Y * schur_factor.solve(rhs);
}

Eigen::MatrixXd solve_basis(const KktSystem& kkt) {
  return solve_basis(kkt, Eigen::MatrixXd::Identity(kkt.A.rows(), kkt.A.rows()));
}

double resolution_ratio(const PotentialSpec& spec, const Mesh& coarse) {
  const int grid = spec.dim == 1 ? default_sup_grid(1) : 128;
  const double V0 = potential_bound(spec, grid);
  return std::sqrt(V0) * coarse.h / spec.epsilon;
}

MultiscaleBasis build_space(const FineOperators& ops, const Mesh& coarse, double t,
                            const BasisOptions& options, BuildReport* report) {
  return build_space(BasisProblem(ops, coarse), t, options, report);
}

MultiscaleBasis build_space(const BasisProblem& problem, double t, const BasisOptions& options,
                            BuildReport* report) {
  const FineOperators& ops = problem.operators();
  const Mesh& coarse = problem.coarse();
  const int l_star = resolve_l_star(options.l_star, coarse);

  const double ratio = resolution_ratio(ops.spec, coarse);
  if (report != nullptr) {
    report->resolution_ratio = ratio;
    if (ratio > options.resolution_limit) {
      std::ostringstream msg;
      msg << "coarse mesh H=1/" << coarse.n << " under-resolves the potential: sqrt(V0) H/eps = "
          << ratio << " > " << options.resolution_limit;
      report->warnings.push_back(msg.str());
    }
  }

  MultiscaleBasis basis;
  basis.coarse = coarse;
  basis.fine = ops.mesh;
  basis.build_time = t;
  basis.l_star = l_star;
  const int n_coarse = coarse.n_dofs();
  std::vector<Eigen::Triplet<double>> entries;

  if (l_star == kGlobalLStar) {
    const KktSystem sys = problem.kkt(t, nullptr, options.shift);
    const Eigen::MatrixXd C = solve_basis(sys);
    entries.reserve(static_cast<std::size_t>(C.size()));
    for (int i = 0; i < n_coarse; ++i) {
      for (Eigen::Index k = 0; k < C.rows(); ++k) entries.emplace_back(sys.active_dofs[k], i, C(k, i));
    }
  } else {
    basis.patches.resize(n_coarse);
    std::vector<KktSystem> systems(n_coarse);
    std::vector<Eigen::VectorXd> columns(n_coarse);
    parallel_for(n_coarse, options.workers, [&](int i) {
      basis.patches[i] = nodal_patch(coarse, i, l_star);
      KktSystem sys = problem.kkt(t, &basis.patches[i], options.shift);
      const auto it = std::find(sys.constraint_vertices.begin(), sys.constraint_vertices.end(), i);
      Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(sys.A.rows(), 1);
      rhs(it - sys.constraint_vertices.begin(), 0) = 1.0;
      try {
        columns[i] = solve_basis(sys, rhs).col(0);
      } catch (const Error& e) {
        throw Error("basis function at coarse vertex " + std::to_string(i) + ": " + e.what());
      }
      systems[i].active_dofs = std::move(sys.active_dofs);
    });
    for (int i = 0; i < n_coarse; ++i) {
      for (Eigen::Index k = 0; k < columns[i].size(); ++k) {
        entries.emplace_back(systems[i].active_dofs[k], i, columns[i][k]);
      }
    }
  }
  basis.functions = BasisMatrix(ops.mesh.n_dofs(), n_coarse);
  basis.functions.setFromTriplets(entries.begin(), entries.end());
  basis.functions.makeCompressed();
  return basis;
}

double biorthogonality_residual(const MultiscaleBasis& basis, const SparseMatrix& fine_M) {
  const SparseMatrix P = coarse_to_fine_interpolation(basis.fine, basis.coarse);
  const Eigen::MatrixXd G = Eigen::MatrixXd(SparseMatrix(P.transpose()) * (fine_M * basis.functions));
  return (G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

double fit_geometric_rate(const std::vector<double>& values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t l = 0; l < values.size(); ++l) {
    if (!(values[l] > 0.0)) continue;
    const double x = static_cast<double>(l);
    const double y = std::log(values[l]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return 0.0;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return std::exp(slope);
}

DecayProfile decay_profile(const MultiscaleBasis& basis, const SparseMatrix& fine_S, int max_level) {
  if (!basis.global()) {
    throw std::invalid_argument("decay_profile: decay is measured on the global (untruncated) basis");
  }
  DecayProfile profile;
  profile.ratios.assign(basis.size(), std::vector<double>(max_level + 1, 0.0));
  for (int i = 0; i < basis.size(); ++i) {
    const Eigen::VectorXd phi = Eigen::VectorXd(basis.functions.col(i));
    const Eigen::VectorXd Sphi = fine_S * phi;
    const double total = phi.dot(Sphi);
    for (int l = 0; l <= max_level; ++l) {
      const Patch patch = nodal_patch(basis.coarse, i, l);
      double part = 0.0;
      if (!patch.covers(basis.coarse)) {
        // Lumped restriction: rows of the complement dofs, so elements that
        // straddle the patch boundary contribute through their outside dofs.
        std::vector<char> inside(basis.fine.n_dofs(), 0);
        for (int s : fine_dofs_in_patch(basis.fine, basis.coarse, patch)) inside[s] = 1;
        for (int s = 0; s < basis.fine.n_dofs(); ++s) {
          if (!inside[s]) part += phi[s] * Sphi[s];
        }
      }
      profile.ratios[i][l] = total > 0.0 ? std::sqrt(std::clamp(part / total, 0.0, 1.0)) : 0.0;
    }
  }
  profile.worst.assign(max_level + 1, 0.0);
  for (const auto& r : profile.ratios) {
    for (int l = 0; l <= max_level; ++l) profile.worst[l] = std::max(profile.worst[l], r[l]);
  }
  profile.beta_hat = fit_geometric_rate(profile.worst);
  return profile;
}

}  // namespace msfem
