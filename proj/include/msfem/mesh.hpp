#pragma once

#include <vector>

#include "msfem/types.hpp"

namespace msfem {

/// Uniform periodic mesh of the unit interval (dim 1) or unit square (dim 2).
///
/// In 2D every axis-aligned cell (i, j) is split along its lower-left to
/// upper-right diagonal into element 2*(i + n*j) (lower-right triangle) and
/// element 2*(i + n*j) + 1 (upper-left triangle). Vertex (i, j) has dof index
/// i + n*j. Periodic identification leaves n^dim distinct vertices.
struct Mesh {
  int dim = 1;
  int n = 0;
  double h = 0.0;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> elements;

  int n_dofs() const { return static_cast<int>(vertices.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }
  int nodes_per_element() const { return dim + 1; }
  double element_measure() const { return dim == 1 ? h : 0.5 * h * h; }

  /// Vertex index of grid point (i, j), wrapping periodically.
  int vertex_index(int i, int j = 0) const;

  /// Element vertex coordinates without periodic wrapping (may reach 1.0).
  std::array<Point, 3> element_coords(int e) const;
};

Mesh build_mesh(int dim, int n_cells_per_side);

/// n_fine / n_coarse; throws unless the fine mesh refines the coarse one.
int refinement_ratio(const Mesh& fine, const Mesh& coarse);

struct Patch {
  int center_vertex = 0;
  int level = 0;
  std::vector<int> element_ids;  // sorted

  bool covers(const Mesh& mesh) const {
    return static_cast<int>(element_ids.size()) == mesh.n_elements();
  }
};

/// Level-l nodal patch: level 0 is the support of the hat at `vertex`, each
/// further level adds every element touching the closure of the previous one.
Patch nodal_patch(const Mesh& mesh, int vertex, int level);

/// Coarse elements whose closure contains fine vertex `fine_dof`.
std::vector<int> coarse_elements_containing(const Mesh& fine, const Mesh& coarse, int fine_dof);

/// Fine dofs strictly inside the patch region. Dofs on the patch boundary are
/// excluded; they carry the homogeneous condition of the localized problem.
std::vector<int> fine_dofs_in_patch(const Mesh& fine, const Mesh& coarse, const Patch& patch);

}  // namespace msfem
