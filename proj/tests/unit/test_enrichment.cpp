#include <doctest.h>

#include <algorithm>

#include "msfem/enrichment.hpp"
#include "msfem/fem_assembly.hpp"

using namespace msfem;

namespace {

// Direct re-implementation of the selection loop: dense drive samples, step 3
// argmax of the sup norm over l > 0, then repeated farthest-point picks.
std::vector<int> brute_force_greedy(const PotentialSpec& spec, const std::vector<double>& times, double delta,
                                    int grid_n) {
  const auto grid = sampling_grid(spec.dim, grid_n);
  const int n = static_cast<int>(times.size());
  std::vector<std::vector<double>> samples(n);
  for (int l = 0; l < n; ++l) {
    for (const auto& p : grid) samples[l].push_back(spec.drive(p, times[l]));
  }
  auto dist = [&](int a, int b) {
    double d = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) d = std::max(d, std::abs(samples[a][i] - samples[b][i]));
    return d;
  };
  auto beats = [](double candidate, double best) { return candidate > best * (1 + 1e-12) + 1e-300; };

  int first = 1;
  double best = -1.0;
  for (int l = 1; l < n; ++l) {
    double sup = 0.0;
    for (double v : samples[l]) sup = std::max(sup, std::abs(v));
    if (beats(sup, best)) {
      best = sup;
      first = l;
    }
  }
  std::vector<int> chosen{first};
  std::vector<char> used(n, 0);
  used[first] = 1;
  while (true) {
    int pick = -1;
    double score = -1.0;
    for (int r = 0; r < n; ++r) {
      if (used[r]) continue;
      double nearest = INFINITY;
      for (int s : chosen) nearest = std::min(nearest, dist(s, r));
      if (beats(nearest, score)) {
        score = nearest;
        pick = r;
      }
    }
    if (pick < 0 || score <= delta) break;
    chosen.push_back(pick);
    used[pick] = 1;
  }
  return chosen;
}

const FineOperators& mathieu_ops() {
  static const FineOperators ops = assemble_fine_operators(build_mesh(1, 1024), catalog(1, 1.0 / 32, 20));
  return ops;
}

}  // namespace

TEST_CASE("snapshot times and defaults") {
  const auto ex1 = catalog(1, 1.0 / 32, 20);
  const auto times = period_snapshots(ex1, 64);
  REQUIRE(times.size() == 64);
  CHECK(times[16] == 0.25);
  CHECK(times.back() == 63.0 / 64);
  const auto half = period_snapshots(catalog(3, 1.0 / 32, 20), 4, 1.0);
  CHECK(half == std::vector<double>{1.0, 1.125, 1.25, 1.375});
  CHECK(default_delta(ex1, times) == doctest::Approx(2.0));

  CHECK(enrichment_block_size(64, 0.125) == 8);
  CHECK(enrichment_block_size(32 * 32, 1.0 / 16) == 64);
  CHECK(enrichment_block_size(3, 0.5) == 2);
  CHECK(enrichment_block_size(10, 1.0) == 10);
}

TEST_CASE("greedy selection") {
  const auto ex1 = catalog(1, 1.0 / 32, 20);
  const auto times = period_snapshots(ex1, 64);

  const SnapshotSet one = greedy_select(ex1, times, 1.0, GreedyMode::one_step);
  CHECK(one.selected_times() == std::vector<double>{0.25});
  CHECK(one.remaining.size() == 63);

  const SnapshotSet big = greedy_select(ex1, times, 2 * 20 + 1);
  CHECK(big.selected == std::vector<int>{16});

  for (double delta : {1.0, 5.0, 15.0}) {
    const SnapshotSet s = greedy_select(ex1, times, delta, GreedyMode::full, 257);
    CHECK(s.selected == brute_force_greedy(ex1, times, delta, 257));
    std::vector<int> all = s.selected;
    all.insert(all.end(), s.remaining.begin(), s.remaining.end());
    std::sort(all.begin(), all.end());
    for (int l = 0; l < 64; ++l) CHECK(all[l] == l);
    CHECK(std::is_sorted(s.remaining.begin(), s.remaining.end()));
  }
  // Example 2's asymmetric drive exercises a different ordering.
  const auto ex2 = catalog(2, 1.0 / 32, 20);
  CHECK(greedy_select(ex2, times, 1.0, GreedyMode::full, 257).selected == brute_force_greedy(ex2, times, 1.0, 257));

  CHECK_THROWS_AS(greedy_select(ex1, {0.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(greedy_select(ex1, times, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(greedy_select(ex1, {0.5, 0.25}, 1.0), std::invalid_argument);
}

TEST_CASE("one-step enrichment of the Mathieu basis") {
  const FineOperators& ops = mathieu_ops();
  const Mesh coarse = build_mesh(1, 64);
  const auto times = period_snapshots(ops.spec, 64);
  const SnapshotSet snapshots = greedy_select(ops.spec, times, default_delta(ops.spec, times), GreedyMode::one_step);
  const EnrichedSpace raw = enrich(ops, coarse, snapshots);
  REQUIRE(raw.blocks.size() == 2);
  CHECK(raw.blocks[1].size() == 8);
  CHECK(raw.dimension() == 72);
  CHECK_FALSE(raw.postprocessed);

  const EnrichedSpace space = postprocess(raw, ops.M);
  CHECK(space.postprocessed);
  CHECK(space.kept_counts == std::vector<int>{64, 8});
  CHECK(space.dimension() == 72);

  // V^H columns are untouched and the enrichment is M-orthogonal to them.
  const Eigen::MatrixXd F(space.functions);
  const Eigen::MatrixXd VH(raw.blocks[0].functions);
  CHECK((F.leftCols(64) - VH).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd gram = F.transpose() * (ops.M * F);
  CHECK(gram.topRightCorner(64, 8).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((gram.bottomRightCorner(8, 8) - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("degenerate enrichment") {
  const FineOperators& ops = mathieu_ops();
  const Mesh coarse = build_mesh(1, 64);

  SnapshotSet empty;
  empty.times = {0.0, 0.25};
  empty.remaining = {0, 1};
  const EnrichedSpace plain = postprocess(enrich(ops, coarse, empty), ops.M);
  CHECK(plain.blocks.size() == 1);
  CHECK(plain.dimension() == 64);
  CHECK(Eigen::MatrixXd(plain.functions - build_space(ops, coarse, 0.0).functions).cwiseAbs().maxCoeff() == 0.0);

  // sin(2 pi) vanishes to rounding, so the block duplicates V^H.
  SnapshotSet duplicate;
  duplicate.times = {0.0, 1.0};
  duplicate.selected = {1};
  duplicate.remaining = {0};
  const EnrichedSpace dup = postprocess(enrich(ops, coarse, duplicate), ops.M);
  CHECK(dup.kept_counts == std::vector<int>{64, 0});
  CHECK(dup.dimension() == 64);
}

TEST_CASE("continuity probe") {
  const FineOperators& ops = mathieu_ops();
  const BasisProblem problem(ops, build_mesh(1, 64));
  const ContinuityProbe same = continuity_probe(problem, 0.3, 0.3);
  CHECK(same.basis_distance == 0.0);
  CHECK(same.drive_distance == 0.0);

  CHECK(continuity_probe(problem, 0.0, 0.25).drive_distance == doctest::Approx(20.0));

  std::vector<double> ratios;
  for (double t2 : {1e-1, 1e-2, 1e-3}) {
    const ContinuityProbe p = continuity_probe(problem, 0.0, t2);
    CHECK(p.basis_distance > 0.0);
    ratios.push_back(p.basis_distance / p.drive_distance);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo < 2.0);
}

TEST_CASE("span projector") {
  const Mesh fine = build_mesh(1, 32);
  const SparseMatrix M = assemble_mass(fine);
  std::vector<Eigen::Triplet<double>> t;
  for (int s = 0; s < 32; ++s) t.emplace_back(s, 0, 1.0);
  for (int s = 0; s < 16; ++s) t.emplace_back(s, 1, 1.0);
  BasisMatrix B(32, 2);
  B.setFromTriplets(t.begin(), t.end());
  const SpanProjector projector(B, M);
  const Eigen::VectorXd inside = 3 * Eigen::VectorXd(B.col(0)) - Eigen::VectorXd(B.col(1));
  CHECK(projector.residual(inside).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(32, 0.0, 1.0);
  const Eigen::VectorXd r = projector.residual(x);
  const Eigen::VectorXd Mr = M * r;
  CHECK(std::abs(Mr.dot(Eigen::VectorXd(B.col(0)))) < 1e-12);
  CHECK(std::abs(Mr.dot(Eigen::VectorXd(B.col(1)))) < 1e-12);
}
