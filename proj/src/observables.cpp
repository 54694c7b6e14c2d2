#include "msfem/observables.hpp"

#include <cmath>

#include "msfem/fem_assembly.hpp"

namespace msfem {
namespace {

double hermitian_form(const Eigen::VectorXcd& x, const SparseMatrix& A) {
  const Eigen::VectorXd re = x.real();
  const Eigen::VectorXd im = x.imag();
  return re.dot(A * re) + im.dot(A * im);
}

}  // namespace

Eigen::VectorXd position_density(const Eigen::VectorXcd& psi) { return psi.cwiseAbs2(); }

std::vector<Point> element_centroids(const Mesh& mesh) {
  std::vector<Point> out;
  out.reserve(mesh.n_elements());
  const double w = 1.0 / mesh.nodes_per_element();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto xs = mesh.element_coords(e);
    Point c{0.0, 0.0};
    for (int a = 0; a < mesh.nodes_per_element(); ++a) {
      c[0] += w * xs[a][0];
      c[1] += w * xs[a][1];
    }
    out.push_back(c);
  }
  return out;
}

Eigen::VectorXd energy_density(const Eigen::VectorXcd& psi, const PotentialSpec& spec, double t,
                               const Mesh& mesh) {
  if (psi.size() != mesh.n_dofs()) throw Error("energy_density: state does not match the mesh");
  const auto& rule = quadrature_rule(mesh.dim);
  const int npe = mesh.nodes_per_element();
  const double half_eps2 = 0.5 * spec.epsilon * spec.epsilon;
  Eigen::VectorXd out(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    const auto xs = mesh.element_coords(e);
    double grad2 = 0.0;
    if (mesh.dim == 1) {
      const Complex g = (psi[el[1]] - psi[el[0]]) / mesh.h;
      grad2 = std::norm(g);
    } else {
      // Gradient of the linear interpolant from the two edge vectors.
      const double ax = xs[1][0] - xs[0][0], ay = xs[1][1] - xs[0][1];
      const double bx = xs[2][0] - xs[0][0], by = xs[2][1] - xs[0][1];
      const double det = ax * by - ay * bx;
      const Complex da = psi[el[1]] - psi[el[0]];
      const Complex db = psi[el[2]] - psi[el[0]];
      const Complex gx = (by * da - ay * db) / det;
      const Complex gy = (-bx * da + ax * db) / det;
      grad2 = std::norm(gx) + std::norm(gy);
    }
    double potential = 0.0;
    for (const auto& q : rule) {
      Complex value = 0.0;
      for (int a = 0; a < npe; ++a) value += q.barycentric[a] * psi[el[a]];
      potential += q.weight * spec(map_to_element(mesh, e, q.barycentric), t) * std::norm(value);
    }
    out[e] = half_eps2 * grad2 + potential;
  }
  return out;
}

double total_mass(const Eigen::VectorXcd& psi, const SparseMatrix& M) { return hermitian_form(psi, M); }

double total_energy(const Eigen::VectorXcd& psi, const FineOperators& ops, double t) {
  return hermitian_form(psi, ops.hamiltonian(t));
}

ErrorReport relative_errors(const Eigen::VectorXcd& num, const Eigen::VectorXcd& ref,
                            const SparseMatrix& fine_S, const SparseMatrix& fine_M) {
  if (num.size() != ref.size() || ref.size() != fine_M.rows()) {
    throw Error("relative_errors: states live on different meshes");
  }
  const double ref_l2 = hermitian_form(ref, fine_M);
  const double ref_h1 = ref_l2 + hermitian_form(ref, fine_S);
  if (!(ref_l2 > 0.0)) throw Error("relative_errors: reference has zero norm");
  const Eigen::VectorXcd diff = num - ref;
  const double d_l2 = hermitian_form(diff, fine_M);
  const double d_h1 = d_l2 + hermitian_form(diff, fine_S);
  ErrorReport report;
  report.rel_L2 = std::sqrt(std::max(0.0, d_l2) / ref_l2);
  report.rel_H1 = std::sqrt(std::max(0.0, d_h1) / ref_h1);
  return report;
}

std::vector<TracePoint> mass_and_energy_trace(const std::vector<FineSnapshot>& trajectory,
                                              const FineOperators& ops) {
  std::vector<TracePoint> out;
  out.reserve(trajectory.size());
  for (const auto& snap : trajectory) {
    out.push_back({snap.t, total_mass(snap.psi, ops.M), total_energy(snap.psi, ops, snap.t)});
  }
  return out;
}

}  // namespace msfem
