#include <doctest.h>

#include <cmath>
#include <numbers>

#include "msfem/evolution.hpp"
#include "msfem/fem_assembly.hpp"
#include "msfem/observables.hpp"

using namespace msfem;

namespace {

constexpr double kPi = std::numbers::pi;

PotentialSpec free_particle(int dim, double eps) { return custom_potential(dim, eps, 0.0, "0", "", "", 1.0); }

std::vector<FineSnapshot> run(const FineOperators& ops, double dt, double T, int stride) {
  std::vector<FineSnapshot> out;
  EvolveOptions options;
  options.stride = stride;
  options.observer = [&](int, const WaveState& s, const Eigen::VectorXcd& f) { out.push_back({s.t, f}); };
  evolve(project_system(ops, nullptr), {gaussian_packet(ops.mesh), 0.0}, dt, T, options);
  return out;
}

}  // namespace

TEST_CASE("position density") {
  const Mesh mesh = build_mesh(1, 64);
  CHECK(position_density(Eigen::VectorXcd::Ones(64)) == Eigen::VectorXd::Ones(64));
  const auto phase = project_function(mesh, [](const Point& p) { return std::exp(Complex(0, 7 * std::sin(5 * p[0]))); });
  CHECK((position_density(phase) - Eigen::VectorXd::Ones(64)).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::VectorXd n = position_density(gaussian_packet(mesh, 0.2));
  CHECK(n[32] == doctest::Approx(1.0 / std::sqrt(2 * kPi * 0.04)).epsilon(1e-14));
  CHECK(n.minCoeff() >= 0.0);

  const Mesh square = build_mesh(2, 8);
  const Eigen::VectorXd n2 = position_density(gaussian_packet(square, 0.2));
  CHECK(n2[square.vertex_index(4, 4)] == doctest::Approx(1.0 / (2 * kPi * 0.04)).epsilon(1e-14));
}

TEST_CASE("energy density") {
  const double eps = 1.0 / 32;
  const Mesh mesh = build_mesh(1, 2048);
  const PotentialSpec free = free_particle(1, eps);
  const Eigen::VectorXd flat = energy_density(Eigen::VectorXcd::Ones(2048), free, 0.0, mesh);
  CHECK(flat.cwiseAbs().maxCoeff() == 0.0);

  // Plane wave at the oscillation scale: the continuum density is 2 pi^2, and the
  // chord of the interpolant shrinks it by sinc^2(k h / 2).
  const auto wave = project_function(mesh, [eps](const Point& p) { return std::exp(Complex(0, 2 * kPi * p[0] / eps)); });
  const Eigen::VectorXd e = energy_density(wave, free, 0.0, mesh);
  const double kh = 2 * kPi / eps / 2048;
  const double sinc = std::sin(kh / 2) / (kh / 2);
  CHECK(e.minCoeff() == doctest::Approx(2 * kPi * kPi * sinc * sinc).epsilon(1e-10));
  CHECK(e.maxCoeff() == doctest::Approx(2 * kPi * kPi).epsilon(2e-3));

  // Summing the element averages reproduces the Hamiltonian quadratic form.
  for (int dim : {1, 2}) {
    const Mesh m = build_mesh(dim, dim == 1 ? 256 : 24);
    const PotentialSpec spec = dim == 1 ? catalog(2, 1.0 / 16, 20) : catalog(4, 1.0 / 8, 20);
    const FineOperators ops = assemble_fine_operators(m, spec);
    const auto psi = project_function(m, [](const Point& p) {
      return Complex(std::cos(2 * kPi * p[0]) + 0.3, std::sin(2 * kPi * (p[0] + p[1])));
    });
    const double t = 0.3;
    const double total = energy_density(psi, spec, t, m).sum() * m.element_measure();
    CHECK(total == doctest::Approx(total_energy(psi, ops, t)).epsilon(1e-10));
    CHECK(element_centroids(m).size() == static_cast<std::size_t>(m.n_elements()));
  }
  const auto c = element_centroids(build_mesh(2, 2));
  CHECK(c[0][0] == doctest::Approx(1.0 / 3));
  CHECK(c[0][1] == doctest::Approx(1.0 / 6));
  CHECK(c[1][0] == doctest::Approx(1.0 / 6));
  CHECK(c[1][1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("mass against composite midpoint quadrature") {
  const Mesh mesh = build_mesh(1, 128);
  const SparseMatrix M = assemble_mass(mesh);
  auto f = [](double x) { return Complex(std::cos(2 * kPi * x), 0.5 * std::sin(4 * kPi * x)); };
  const auto psi = project_function(mesh, [&](const Point& p) { return f(p[0]); });
  double midpoint = 0.0;
  const int sub = 64;
  for (int e = 0; e < 128; ++e) {
    for (int k = 0; k < sub; ++k) {
      const double u = (k + 0.5) / sub;
      const Complex v = (1 - u) * psi[e] + u * psi[(e + 1) % 128];
      midpoint += std::norm(v) * mesh.h / sub;
    }
  }
  CHECK(total_mass(psi, M) == doctest::Approx(midpoint).epsilon(1e-6));
  CHECK(total_mass(psi, M) == doctest::Approx(0.5 + 0.125).epsilon(1e-3));
}

TEST_CASE("relative errors") {
  const int n = 2048;
  const Mesh mesh = build_mesh(1, n);
  const SparseMatrix S = assemble_stiffness(mesh), M = assemble_mass(mesh);
  const Eigen::VectorXcd ref = gaussian_packet(mesh);

  const ErrorReport same = relative_errors(ref, ref, S, M);
  CHECK(same.rel_L2 == 0.0);
  CHECK(same.rel_H1 == 0.0);
  const ErrorReport twice = relative_errors(2.0 * ref, ref, S, M);
  CHECK(twice.rel_L2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(twice.rel_H1 == doctest::Approx(1.0).epsilon(1e-14));

  // A single Fourier mode k = 2 pi 32 has |grad| / |.| = k.
  const auto mode = project_function(mesh, [](const Point& p) { return 1e-3 * std::exp(Complex(0, 2 * kPi * 32 * p[0])); });
  const ErrorReport r = relative_errors(ref + mode, ref, S, M);
  const double ref_l2 = std::sqrt(total_mass(ref, M));
  const double ref_h1 = std::sqrt(total_mass(ref, M) + std::real(ref.dot(S * ref)));
  const double k = 2 * kPi * 32;
  CHECK(r.rel_L2 == doctest::Approx(1e-3 / ref_l2).epsilon(1e-4));
  CHECK(r.rel_H1 == doctest::Approx(1e-3 * std::sqrt(1 + k * k) / ref_h1).epsilon(1e-3));
  CHECK(r.rel_H1 / r.rel_L2 == doctest::Approx(k * ref_l2 / ref_h1).epsilon(1e-3));
  CHECK(r.rel_H1 > 20 * r.rel_L2);

  CHECK_THROWS_AS(relative_errors(ref, Eigen::VectorXcd::Zero(n), S, M), Error);
  CHECK_THROWS_AS(relative_errors(ref.head(10), ref, S, M), Error);
}

TEST_CASE("mass and energy traces") {
  const Mesh mesh = build_mesh(1, 256);

  const FineOperators driven = assemble_fine_operators(mesh, catalog(2, 1.0 / 16, 20));
  const auto tr = mass_and_energy_trace(run(driven, 1.0 / 256, 1.0, 32), driven);
  REQUIRE(tr.size() == 9);
  double mmin = INFINITY, mmax = 0, emin = INFINITY, emax = -INFINITY;
  for (const auto& p : tr) {
    mmin = std::min(mmin, p.mass);
    mmax = std::max(mmax, p.mass);
    emin = std::min(emin, p.energy);
    emax = std::max(emax, p.energy);
  }
  CHECK((mmax - mmin) / mmax <= 1e-10);
  CHECK(emax - emin > 1e-2 * std::abs(emax));
  CHECK(tr.back().t == 1.0);

  // Without a drive the energy drifts only at the CN accuracy level.
  const FineOperators still = assemble_fine_operators(mesh, custom_potential(1, 1.0 / 16, 0, "cos(2*pi*x/eps)", "", "", 1));
  const auto flat = mass_and_energy_trace(run(still, 1.0 / 256, 0.5, 16), still);
  for (const auto& p : flat) CHECK(p.energy == doctest::Approx(flat.front().energy).epsilon(1e-10));
}
