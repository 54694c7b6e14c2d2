#include "msfem/fem_assembly.hpp"

#include <cmath>

namespace msfem {
namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix from_triplets(int n, const Triplets& entries) {
  SparseMatrix A(n, n);
  A.setFromTriplets(entries.begin(), entries.end());
  A.makeCompressed();
  return A;
}

// Gradients of the P1 shape functions on a 2D element (constant per element).
std::array<std::array<double, 2>, 3> triangle_gradients(const std::array<Point, 3>& p) {
  const double det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) -
                     (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
  std::array<std::array<double, 2>, 3> g{};
  for (int a = 0; a < 3; ++a) {
    const Point& q1 = p[(a + 1) % 3];
    const Point& q2 = p[(a + 2) % 3];
    g[a] = {(q1[1] - q2[1]) / det, (q2[0] - q1[0]) / det};
  }
  return g;
}

}  // namespace

const std::vector<QuadraturePoint>& quadrature_rule(int dim) {
  static const std::vector<QuadraturePoint> gauss5 = [] {
    const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
    const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
    const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
    const double w0 = 128.0 / 225.0;
    std::vector<QuadraturePoint> rule;
    for (auto [xi, w] : {std::pair{-b, wb}, {-a, wa}, {0.0, w0}, {a, wa}, {b, wb}}) {
      const double s = 0.5 * (xi + 1.0);
      rule.push_back({{1.0 - s, s, 0.0}, 0.5 * w});
    }
    return rule;
  }();
  static const std::vector<QuadraturePoint> triangle7 = [] {
    const double r15 = std::sqrt(15.0);
    const double a1 = (6.0 - r15) / 21.0;
    const double a2 = (6.0 + r15) / 21.0;
    const double w1 = (155.0 - r15) / 1200.0;
    const double w2 = (155.0 + r15) / 1200.0;
    std::vector<QuadraturePoint> rule{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 9.0 / 40.0}};
    for (auto [a, w] : {std::pair{a1, w1}, {a2, w2}}) {
      const double c = 1.0 - 2.0 * a;
      rule.push_back({{c, a, a}, w});
      rule.push_back({{a, c, a}, w});
      rule.push_back({{a, a, c}, w});
    }
    return rule;
  }();
  return dim == 1 ? gauss5 : triangle7;
}

Point map_to_element(const Mesh& mesh, int e, const std::array<double, 3>& bary) {
  const auto p = mesh.element_coords(e);
  Point x{0.0, 0.0};
  for (int a = 0; a < mesh.nodes_per_element(); ++a) {
    x[0] += bary[a] * p[a][0];
    x[1] += bary[a] * p[a][1];
  }
  return x;
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
  Triplets entries;
  const int npe = mesh.nodes_per_element();
  entries.reserve(static_cast<std::size_t>(mesh.n_elements()) * npe * npe);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    if (mesh.dim == 1) {
      const double k = 1.0 / mesh.h;
      entries.emplace_back(el[0], el[0], k);
      entries.emplace_back(el[1], el[1], k);
      entries.emplace_back(el[0], el[1], -k);
      entries.emplace_back(el[1], el[0], -k);
      continue;
    }
    const auto g = triangle_gradients(mesh.element_coords(e));
    const double area = mesh.element_measure();
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        entries.emplace_back(el[a], el[b], area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
      }
    }
  }
  return from_triplets(mesh.n_dofs(), entries);
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  Triplets entries;
  const int npe = mesh.nodes_per_element();
  entries.reserve(static_cast<std::size_t>(mesh.n_elements()) * npe * npe);
  const double measure = mesh.element_measure();
  // Local mass: |K| (1 + delta_ab) / ((d+1)(d+2)).
  const double scale = measure / ((mesh.dim + 1) * (mesh.dim + 2));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    for (int a = 0; a < npe; ++a) {
      for (int b = 0; b < npe; ++b) {
        entries.emplace_back(el[a], el[b], scale * (a == b ? 2.0 : 1.0));
      }
    }
  }
  return from_triplets(mesh.n_dofs(), entries);
}

SparseMatrix assemble_potential(const Mesh& mesh, const ScalarField& v) {
  Triplets entries;
  const int npe = mesh.nodes_per_element();
  const auto& rule = quadrature_rule(mesh.dim);
  const double measure = mesh.element_measure();
  entries.reserve(static_cast<std::size_t>(mesh.n_elements()) * npe * npe);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    double local[3][3] = {};
    for (const auto& q : rule) {
      const double value = v(map_to_element(mesh, e, q.barycentric));
      if (!std::isfinite(value)) {
        throw Error("assemble_potential: non-finite potential value on element " +
                    std::to_string(e));
      }
      const double w = q.weight * measure * value;
      for (int a = 0; a < npe; ++a) {
        for (int b = 0; b < npe; ++b) local[a][b] += w * q.barycentric[a] * q.barycentric[b];
      }
    }
    for (int a = 0; a < npe; ++a) {
      for (int b = 0; b < npe; ++b) entries.emplace_back(el[a], el[b], local[a][b]);
    }
  }
  return from_triplets(mesh.n_dofs(), entries);
}

Eigen::VectorXcd project_function(const Mesh& mesh, const ComplexField& f) {
  Eigen::VectorXcd out(mesh.n_dofs());
  for (int i = 0; i < mesh.n_dofs(); ++i) {
    const Complex value = f(mesh.vertices[i]);
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
      throw Error("project_function: non-finite value at vertex " + std::to_string(i));
    }
    out[i] = value;
  }
  return out;
}

SparseMatrix coarse_to_fine_interpolation(const Mesh& fine, const Mesh& coarse) {
  const int r = refinement_ratio(fine, coarse);
  Triplets entries;
  if (fine.dim == 1) {
    for (int s = 0; s < fine.n_dofs(); ++s) {
      const int a = s / r;
      const double u = static_cast<double>(s % r) / r;
      entries.emplace_back(s, coarse.vertex_index(a), 1.0 - u);
      if (u > 0.0) entries.emplace_back(s, coarse.vertex_index(a + 1), u);
    }
  } else {
    for (int s = 0; s < fine.n_dofs(); ++s) {
      const int i = s % fine.n;
      const int j = s / fine.n;
      const int cx = i / r;
      const int cy = j / r;
      const double u = static_cast<double>(i % r) / r;
      const double w = static_cast<double>(j % r) / r;
      // Barycentric weights in the lower-right (u >= w) or upper-left triangle.
      std::array<std::pair<int, double>, 3> weights;
      if (u >= w) {
        weights = {std::pair{coarse.vertex_index(cx, cy), 1.0 - u},
                   {coarse.vertex_index(cx + 1, cy), u - w},
                   {coarse.vertex_index(cx + 1, cy + 1), w}};
      } else {
        weights = {std::pair{coarse.vertex_index(cx, cy), 1.0 - w},
                   {coarse.vertex_index(cx + 1, cy + 1), u},
                   {coarse.vertex_index(cx, cy + 1), w - u}};
      }
      for (auto [vtx, val] : weights) {
        if (val != 0.0) entries.emplace_back(s, vtx, val);
      }
    }
  }
  SparseMatrix P(fine.n_dofs(), coarse.n_dofs());
  P.setFromTriplets(entries.begin(), entries.end());
  P.makeCompressed();
  return P;
}

Eigen::VectorXcd prolongate(const Eigen::VectorXcd& values, const Mesh& from, const Mesh& to) {
  if (values.size() != from.n_dofs()) throw std::invalid_argument("prolongate: size mismatch");
  if (from.n == to.n) return values;
  const SparseMatrix P = coarse_to_fine_interpolation(to, from);
  return P.cast<Complex>() * values;
}

}  // namespace msfem
