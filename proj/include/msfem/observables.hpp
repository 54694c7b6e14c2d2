#pragma once

#include <string>
#include <vector>

#include "msfem/msbasis.hpp"

namespace msfem {

/// |psi|^2 at every fine dof.
Eigen::VectorXd position_density(const Eigen::VectorXcd& psi);

/// Per-element average of (eps^2/2)|grad psi|^2 + (v1 + v2(t))|psi|^2, with the
/// potential term integrated by the assembly quadrature.
Eigen::VectorXd energy_density(const Eigen::VectorXcd& psi, const PotentialSpec& spec, double t,
                               const Mesh& mesh);

/// Element centroids, where energy_density values are reported.
std::vector<Point> element_centroids(const Mesh& mesh);

/// psi^H M psi.
double total_mass(const Eigen::VectorXcd& psi, const SparseMatrix& M);

/// (eps^2/2) psi^H S psi + psi^H (V1 + V2(t)) psi.
double total_energy(const Eigen::VectorXcd& psi, const FineOperators& ops, double t);

struct ErrorReport {
  std::string method;
  int example = 0;
  double epsilon = 0.0;
  double H = 0.0;
  int l_star = 0;
  double dt = 0.0;
  double t = 0.0;
  double rel_L2 = 0.0;
  double rel_H1 = 0.0;
  int basis_dim = 0;
  double mass = 0.0;    // of the numerical state
  double energy = 0.0;  // of the numerical state
};

/// |num - ref| / |ref| in L2 (M form) and unweighted H1 ((S + M) form).
/// Throws Error for a zero reference.
ErrorReport relative_errors(const Eigen::VectorXcd& num, const Eigen::VectorXcd& ref,
                            const SparseMatrix& fine_S, const SparseMatrix& fine_M);

struct TracePoint {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
};

struct FineSnapshot {
  double t = 0.0;
  Eigen::VectorXcd psi;
};

std::vector<TracePoint> mass_and_energy_trace(const std::vector<FineSnapshot>& trajectory,
                                              const FineOperators& ops);

}  // namespace msfem
