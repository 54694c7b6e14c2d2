#pragma once

#include <vector>

#include "msfem/mesh.hpp"

namespace msfem {

/// Quadrature point in barycentric coordinates; weight is a fraction of the
/// element measure (weights sum to one).
struct QuadraturePoint {
  std::array<double, 3> barycentric;
  double weight;
};

/// 5-point Gauss-Legendre on intervals, 7-point degree-5 rule on triangles.
const std::vector<QuadraturePoint>& quadrature_rule(int dim);

/// Physical point of a barycentric coordinate on element `e`.
Point map_to_element(const Mesh& mesh, int e, const std::array<double, 3>& barycentric);

/// Exact P1 stiffness matrix with periodic wrap; rows sum to zero.
SparseMatrix assemble_stiffness(const Mesh& mesh);

/// Exact P1 mass matrix; all entries sum to the domain measure.
SparseMatrix assemble_mass(const Mesh& mesh);

/// Weighted mass matrix (phi_i v phi_j). Throws if v is non-finite at a quadrature point.
SparseMatrix assemble_potential(const Mesh& mesh, const ScalarField& v);

/// Nodal interpolation of f at the mesh vertices.
Eigen::VectorXcd project_function(const Mesh& mesh, const ComplexField& f);

/// Coarse P1 hats evaluated at fine vertices (N_h x N_H). Exact for nested meshes.
SparseMatrix coarse_to_fine_interpolation(const Mesh& fine, const Mesh& coarse);

/// Piecewise-linear embedding of a P1 function into a refinement of its mesh.
Eigen::VectorXcd prolongate(const Eigen::VectorXcd& values, const Mesh& from, const Mesh& to);

}  // namespace msfem
