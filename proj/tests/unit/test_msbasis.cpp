#include <doctest.h>

#include <random>

#include "msfem/fem_assembly.hpp"
#include "msfem/msbasis.hpp"

using namespace msfem;

namespace {

PotentialSpec zero_potential(double eps) { return custom_potential(1, eps, 0.0, "0", "", "", 1.0); }

// Dense saddle-point solve [[Q, A^T], [A, 0]] [c; mu] = [0; b].
Eigen::MatrixXd saddle_oracle(const KktSystem& kkt) {
  const int n = static_cast<int>(kkt.Q.rows());
  const int m = static_cast<int>(kkt.A.rows());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = Eigen::MatrixXd(kkt.Q);
  K.topRightCorner(n, m) = Eigen::MatrixXd(kkt.A).transpose();
  K.bottomLeftCorner(m, n) = Eigen::MatrixXd(kkt.A);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + m, m);
  rhs.bottomRows(m) = Eigen::MatrixXd::Identity(m, m);
  return Eigen::FullPivLU<Eigen::MatrixXd>(K).solve(rhs).topRows(n);
}

double energy_norm(const Eigen::VectorXd& v, const SparseMatrix& S, const SparseMatrix& M) {
  return std::sqrt(v.dot(S * v) + v.dot(M * v));
}

}  // namespace

TEST_CASE("kkt structure") {
  const Mesh fine = build_mesh(1, 16);
  const Mesh coarse = build_mesh(1, 4);
  const double eps = 0.1;
  const FineOperators ops = assemble_fine_operators(fine, zero_potential(eps));
  const KktSystem kkt = build_kkt(ops, coarse, 0.0, nullptr);
  CHECK(kkt.A.rows() == coarse.n_dofs());
  CHECK(kkt.Q.rows() == fine.n_dofs());
  CHECK((Eigen::MatrixXd(kkt.Q) - 0.5 * eps * eps * Eigen::MatrixXd(assemble_stiffness(fine))).norm() == 0.0);

  // Each coarse hat integrates to H.
  const Eigen::VectorXd measured = kkt.A * Eigen::VectorXd::Ones(fine.n_dofs());
  for (int j = 0; j < coarse.n_dofs(); ++j) CHECK(measured[j] == doctest::Approx(coarse.h).epsilon(1e-14));

  const Patch patch = nodal_patch(coarse, 1, 0);
  const KktSystem local = build_kkt(ops, coarse, 0.0, &patch);
  CHECK(local.active_dofs == fine_dofs_in_patch(fine, coarse, patch));
  CHECK(local.constraint_vertices.size() == static_cast<std::size_t>(local.A.rows()));
}

TEST_CASE("single constraint closed form") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const int n = 12;
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = g(rng);
  const Eigen::MatrixXd Qd = B * B.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd a(n);
  for (int i = 0; i < n; ++i) a[i] = g(rng);
  KktSystem kkt;
  kkt.Q = Qd.sparseView();
  kkt.A = Eigen::MatrixXd(a.transpose()).sparseView();
  const Eigen::VectorXd Qia = Qd.llt().solve(a);
  const Eigen::VectorXd expected = Qia / a.dot(Qia);
  const Eigen::MatrixXd c = solve_basis(kkt);
  CHECK((c.col(0) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("semidefinite Q with a zero potential matches the dense saddle oracle") {
  // Q = S/2 has the constants in its kernel; the constrained problem is still convex.
  const FineOperators ops = assemble_fine_operators(build_mesh(1, 8), zero_potential(1.0));
  const KktSystem kkt = build_kkt(ops, build_mesh(1, 2), 0.0, nullptr);
  const Eigen::MatrixXd c = solve_basis(kkt);
  CHECK((c - saddle_oracle(kkt)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((Eigen::MatrixXd(kkt.A) * c - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("randomized patch problems match the dense saddle oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    const double a = u(rng), b = u(rng), k = 1 + 4 * (u(rng) + 1);
    const std::string v1 = std::to_string(a) + "*cos(" + std::to_string(k) + "*2*pi*x) + " + std::to_string(b) + "*x";
    const PotentialSpec spec = custom_potential(1, 0.2, 0.0, v1, "", "", 1.0);
    const FineOperators ops = assemble_fine_operators(build_mesh(1, 64), spec);
    const Mesh coarse = build_mesh(1, 8);
    const Patch patch = nodal_patch(coarse, trial % 8, 1 + trial % 2);
    const KktSystem kkt = build_kkt(ops, coarse, 0.0, &patch);
    CHECK((solve_basis(kkt) - saddle_oracle(kkt)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("solver errors") {
  // A strongly negative potential makes the constrained problem non-convex.
  const PotentialSpec deep = custom_potential(1, 0.05, 0.0, "-1000", "", "", 1.0);
  const FineOperators ops = assemble_fine_operators(build_mesh(1, 64), deep);
  CHECK_THROWS_AS(solve_basis(build_kkt(ops, build_mesh(1, 8), 0.0, nullptr)), IndefiniteOperator);
  const Patch patch = nodal_patch(build_mesh(1, 8), 0, 2);
  CHECK_THROWS_AS(solve_basis(build_kkt(ops, build_mesh(1, 8), 0.0, &patch)), IndefiniteOperator);

  KktSystem dup;
  dup.Q = Eigen::MatrixXd::Identity(4, 4).sparseView();
  Eigen::MatrixXd A(2, 4);
  A << 1, 2, 0, 1, 2, 4, 0, 2;
  dup.A = A.sparseView();
  CHECK_THROWS_AS(solve_basis(dup), RankDeficientConstraints);
  CHECK_THROWS_AS(solve_basis(dup, Eigen::MatrixXd::Ones(3, 1)), std::invalid_argument);
}

TEST_CASE("global basis equals the saturated local basis") {
  const PotentialSpec spec = catalog(1, 0.25, 2.0);
  const FineOperators ops = assemble_fine_operators(build_mesh(1, 32), spec);
  const Mesh coarse = build_mesh(1, 4);
  BasisOptions global;
  global.l_star = kGlobalLStar;
  BasisOptions saturated;
  saturated.l_star = 4;
  const MultiscaleBasis g = build_space(ops, coarse, 0.1, global);
  const MultiscaleBasis s = build_space(ops, coarse, 0.1, saturated);
  CHECK(g.global());
  CHECK_FALSE(s.global());
  CHECK(Eigen::MatrixXd(g.functions - s.functions).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Mathieu basis: biorthogonality, support and count") {
  const FineOperators ops = assemble_fine_operators(build_mesh(1, 1024), catalog(1, 1.0 / 32, 20));
  const Mesh coarse = build_mesh(1, 64);
  BuildReport report;
  const MultiscaleBasis basis = build_space(ops, coarse, 0.0, {}, &report);
  CHECK(basis.size() == 64);
  CHECK(basis.l_star == default_l_star(coarse));
  CHECK(basis.l_star == 6);
  CHECK(biorthogonality_residual(basis, ops.M) <= 1e-8);
  CHECK(report.resolution_ratio == doctest::Approx(resolution_ratio(ops.spec, coarse)));

  for (int i : {0, 17, 63}) {
    const auto inside = fine_dofs_in_patch(ops.mesh, coarse, basis.patches[i]);
    std::vector<char> member(ops.mesh.n_dofs(), 0);
    for (int s : inside) member[s] = 1;
    for (BasisMatrix::InnerIterator it(basis.functions, i); it; ++it) CHECK(member[it.row()] == 1);
  }

  // Determinism of the factorization.
  const MultiscaleBasis again = build_space(ops, coarse, 0.0);
  CHECK(Eigen::MatrixXd(basis.functions - again.functions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("under-resolved coarse mesh warns") {
  const FineOperators ops = assemble_fine_operators(build_mesh(1, 256), catalog(1, 1.0 / 32, 20));
  BuildReport report;
  build_space(ops, build_mesh(1, 16), 0.0, {}, &report);
  CHECK(report.resolution_ratio > 4.0);
  CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("decay profile") {
  const FineOperators ops = assemble_fine_operators(build_mesh(1, 1024), catalog(1, 1.0 / 32, 20));
  BasisOptions options;
  options.l_star = kGlobalLStar;
  const MultiscaleBasis basis = build_space(ops, build_mesh(1, 64), 0.0, options);
  const DecayProfile profile = decay_profile(basis, ops.S, 32);
  for (const auto& r : profile.ratios) {
    CHECK(r[0] <= 1.0);
    CHECK(r[32] == 0.0);  // the level-32 patch covers all 64 elements
  }
  for (int l = 0; l < 5; ++l) CHECK(profile.worst[l + 1] < profile.worst[l]);
  const DecayProfile short_profile = decay_profile(basis, ops.S, 4);
  CHECK(short_profile.beta_hat < 1.0);

  BasisOptions local;
  CHECK_THROWS_AS(decay_profile(build_space(ops, build_mesh(1, 64), 0.0, local), ops.S, 3), std::invalid_argument);

  CHECK(fit_geometric_rate({1.0, 0.5, 0.25, 0.125}) == doctest::Approx(0.5));
  CHECK(fit_geometric_rate({1.0, 0.1, 0.0}) == doctest::Approx(0.1));
}

TEST_CASE("localized functions approach the global ones as the patch grows") {
  const FineOperators ops = assemble_fine_operators(build_mesh(1, 512), catalog(1, 1.0 / 16, 10));
  const Mesh coarse = build_mesh(1, 32);
  BasisOptions options;
  options.l_star = kGlobalLStar;
  const MultiscaleBasis global = build_space(ops, coarse, 0.0, options);
  double previous = INFINITY;
  for (int l = 1; l <= 6; ++l) {
    options.l_star = l;
    const MultiscaleBasis local = build_space(ops, coarse, 0.0, options);
    const Eigen::VectorXd diff = Eigen::VectorXd(local.functions.col(5) - global.functions.col(5));
    const double d = energy_norm(diff, ops.S, ops.M);
    CHECK(d <= previous + 1e-12);
    previous = d;
  }
  CHECK(previous < 1e-2 * energy_norm(Eigen::VectorXd(global.functions.col(5)), ops.S, ops.M));
}
