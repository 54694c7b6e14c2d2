#include "msfem/mesh.hpp"

#include <algorithm>
#include <set>

namespace msfem {
namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

}  // namespace

int Mesh::vertex_index(int i, int j) const {
  if (dim == 1) return wrap(i, n);
  return wrap(i, n) + n * wrap(j, n);
}

std::array<Point, 3> Mesh::element_coords(int e) const {
  if (dim == 1) {
    return {Point{e * h, 0.0}, Point{(e + 1) * h, 0.0}, Point{0.0, 0.0}};
  }
  const int cell = e / 2;
  const double x0 = (cell % n) * h;
  const double y0 = (cell / n) * h;
  if (e % 2 == 0) {
    return {Point{x0, y0}, Point{x0 + h, y0}, Point{x0 + h, y0 + h}};
  }
  return {Point{x0, y0}, Point{x0 + h, y0 + h}, Point{x0, y0 + h}};
}

Mesh build_mesh(int dim, int n_cells_per_side) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("build_mesh: dim must be 1 or 2");
  if (n_cells_per_side < 2) {
    throw std::invalid_argument("build_mesh: need at least 2 cells per side");
  }
  Mesh mesh;
  mesh.dim = dim;
  mesh.n = n_cells_per_side;
  mesh.h = 1.0 / n_cells_per_side;
  const int n = n_cells_per_side;
  if (dim == 1) {
    mesh.vertices.reserve(n);
    mesh.elements.reserve(n);
    for (int k = 0; k < n; ++k) {
      mesh.vertices.push_back({k * mesh.h, 0.0});
      mesh.elements.push_back({k, mesh.vertex_index(k + 1), -1});
    }
    return mesh;
  }
  mesh.vertices.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) mesh.vertices.push_back({i * mesh.h, j * mesh.h});
  }
  mesh.elements.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = mesh.vertex_index(i, j);
      const int v10 = mesh.vertex_index(i + 1, j);
      const int v11 = mesh.vertex_index(i + 1, j + 1);
      const int v01 = mesh.vertex_index(i, j + 1);
      mesh.elements.push_back({v00, v10, v11});
      mesh.elements.push_back({v00, v11, v01});
    }
  }
  return mesh;
}

int refinement_ratio(const Mesh& fine, const Mesh& coarse) {
  if (fine.dim != coarse.dim) throw std::invalid_argument("meshes differ in dimension");
  if (fine.n % coarse.n != 0) {
    throw std::invalid_argument("fine mesh (n=" + std::to_string(fine.n) +
                                ") does not refine coarse mesh (n=" + std::to_string(coarse.n) + ")");
  }
  return fine.n / coarse.n;
}

Patch nodal_patch(const Mesh& mesh, int vertex, int level) {
  if (vertex < 0 || vertex >= mesh.n_dofs()) throw std::out_of_range("nodal_patch: vertex");
  if (level < 0) throw std::invalid_argument("nodal_patch: negative level");

  std::vector<std::vector<int>> vertex_elements(mesh.n_dofs());
  const int npe = mesh.nodes_per_element();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    for (int a = 0; a < npe; ++a) vertex_elements[mesh.elements[e][a]].push_back(e);
  }

  std::vector<char> in_patch(mesh.n_elements(), 0);
  std::vector<int> frontier_vertices{vertex};
  std::vector<char> vertex_seen(mesh.n_dofs(), 0);
  vertex_seen[vertex] = 1;
  for (int l = 0; l <= level; ++l) {
    std::vector<int> added;
    for (int v : frontier_vertices) {
      for (int e : vertex_elements[v]) {
        if (!in_patch[e]) {
          in_patch[e] = 1;
          added.push_back(e);
        }
      }
    }
    frontier_vertices.clear();
    for (int e : added) {
      for (int a = 0; a < npe; ++a) {
        const int v = mesh.elements[e][a];
        if (!vertex_seen[v]) {
          vertex_seen[v] = 1;
          frontier_vertices.push_back(v);
        }
      }
    }
  }

  Patch patch;
  patch.center_vertex = vertex;
  patch.level = level;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (in_patch[e]) patch.element_ids.push_back(e);
  }
  return patch;
}

std::vector<int> coarse_elements_containing(const Mesh& fine, const Mesh& coarse, int fine_dof) {
  const int r = refinement_ratio(fine, coarse);
  const int nc = coarse.n;
  std::vector<int> result;
  if (fine.dim == 1) {
    const int a = fine_dof / r;
    if (fine_dof % r == 0) {
      result = {wrap(a - 1, nc), wrap(a, nc)};
    } else {
      result = {a};
    }
  } else {
    const int i = fine_dof % fine.n;
    const int j = fine_dof / fine.n;
    auto candidates = [&](int idx) {
      std::vector<int> c{idx / r};
      if (idx % r == 0) c.insert(c.begin(), idx / r - 1);
      return c;
    };
    for (int cy : candidates(j)) {
      for (int cx : candidates(i)) {
        // Local integer coordinates in [0, r] within cell (cx, cy).
        const int lx = i - cx * r;
        const int ly = j - cy * r;
        const int cell = wrap(cx, nc) + nc * wrap(cy, nc);
        if (lx >= ly) result.push_back(2 * cell);
        if (ly >= lx) result.push_back(2 * cell + 1);
      }
    }
  }
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

std::vector<int> fine_dofs_in_patch(const Mesh& fine, const Mesh& coarse, const Patch& patch) {
  refinement_ratio(fine, coarse);
  std::vector<char> member(coarse.n_elements(), 0);
  for (int e : patch.element_ids) member[e] = 1;
  std::vector<int> dofs;
  for (int s = 0; s < fine.n_dofs(); ++s) {
    const auto owners = coarse_elements_containing(fine, coarse, s);
    if (std::all_of(owners.begin(), owners.end(), [&](int e) { return member[e] != 0; })) {
      dofs.push_back(s);
    }
  }
  return dofs;
}

}  // namespace msfem
