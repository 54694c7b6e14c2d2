#include "msfem/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "msfem/parallel.hpp"
#include "msfem/simd/kernels.hpp"

namespace msfem {
namespace {

// Drive samples v2_n(x_g) per term on the sampling grid; v2(x, t) is then a
// combination with the time factors.
class DriveSamples {
 public:
  DriveSamples(const PotentialSpec& spec, int grid_n) : spec_(&spec) {
    const auto grid = sampling_grid(spec.dim, grid_n);
    for (const auto& term : spec.terms) {
      std::vector<double> values(grid.size());
      for (std::size_t g = 0; g < grid.size(); ++g) values[g] = term.space(grid[g]);
      space_.push_back(std::move(values));
    }
    size_ = grid.size();
  }

  double sup(double t) const { return distance_coeffs(factors(t)); }

  double distance(double t1, double t2) const {
    auto a = factors(t1);
    const auto b = factors(t2);
    for (std::size_t n = 0; n < a.size(); ++n) a[n] -= b[n];
    return distance_coeffs(a);
  }

 private:
  std::vector<double> factors(double t) const {
    std::vector<double> f;
    for (const auto& term : spec_->terms) f.push_back(term.time(t));
    return f;
  }

  double distance_coeffs(const std::vector<double>& c) const {
    double sup = 0.0;
    for (std::size_t g = 0; g < size_; ++g) {
      double v = 0.0;
      for (std::size_t n = 0; n < c.size(); ++n) v += c[n] * space_[n][g];
      sup = std::max(sup, std::abs(v));
    }
    return sup;
  }

  const PotentialSpec* spec_;
  std::vector<std::vector<double>> space_;
  std::size_t size_ = 0;
};

bool strictly_better(double candidate, double best) {
  return candidate > best + kTieTolerance * std::max(1.0, std::abs(best));
}

int sup_grid_for(const PotentialSpec& spec, int grid_n) {
  return grid_n > 0 ? grid_n : default_sup_grid(spec.dim);
}

}  // namespace

std::vector<double> SnapshotSet::selected_times() const {
  std::vector<double> out;
  for (int i : selected) out.push_back(times[i]);
  return out;
}

std::vector<double> period_snapshots(const PotentialSpec& spec, int count, double t0) {
  if (count < 1) throw std::invalid_argument("period_snapshots: count must be positive");
  std::vector<double> times(count);
  for (int k = 0; k < count; ++k) times[k] = t0 + spec.period * k / count;
  return times;
}

double default_delta(const PotentialSpec& spec, const std::vector<double>& times, int grid_n) {
  const DriveSamples samples(spec, sup_grid_for(spec, grid_n));
  double sup = 0.0;
  for (double t : times) sup = std::max(sup, samples.sup(t));
  return 0.1 * sup;
}

SnapshotSet greedy_select(const PotentialSpec& spec, const std::vector<double>& times, double delta,
                          GreedyMode mode, int grid_n) {
  if (times.size() < 2) throw std::invalid_argument("greedy_select: need t_0 and at least one later instance");
  if (!(delta > 0.0)) throw std::invalid_argument("greedy_select: delta must be positive");
  if (!std::is_sorted(times.begin(), times.end())) {
    throw std::invalid_argument("greedy_select: time instances must be increasing");
  }
  const DriveSamples samples(spec, sup_grid_for(spec, grid_n));
  SnapshotSet set;
  set.times = times;
  set.delta = delta;
  const int count = static_cast<int>(times.size());

  int first = 1;
  double best = samples.sup(times[1]);
  for (int l = 2; l < count; ++l) {
    const double v = samples.sup(times[l]);
    if (strictly_better(v, best)) {
      best = v;
      first = l;
    }
  }
  set.selected.push_back(first);
  std::vector<char> taken(count, 0);
  taken[first] = 1;

  // min over selected instances of the distance to each instance.
  std::vector<double> nearest(count);
  for (int r = 0; r < count; ++r) nearest[r] = samples.distance(times[first], times[r]);

  if (mode == GreedyMode::full) {
    while (true) {
      int pick = -1;
      double score = 0.0;
      for (int r = 0; r < count; ++r) {
        if (taken[r]) continue;
        if (pick < 0 || strictly_better(nearest[r], score)) {
          pick = r;
          score = nearest[r];
        }
      }
      if (pick < 0 || !(score > delta)) break;
      set.selected.push_back(pick);
      taken[pick] = 1;
      for (int r = 0; r < count; ++r) {
        nearest[r] = std::min(nearest[r], samples.distance(times[pick], times[r]));
      }
    }
  }
  for (int r = 0; r < count; ++r) {
    if (!taken[r]) set.remaining.push_back(r);
  }
  return set;
}

SpanProjector::SpanProjector(const BasisMatrix& B, const SparseMatrix& fine_M) : B_(&B), M_(&fine_M) {
  const BasisMatrix MB = fine_M * B;
  Eigen::SparseMatrix<double> G = B.transpose() * MB;
  gram_.compute(G);
  if (gram_.info() != Eigen::Success) throw Error("SpanProjector: degenerate basis Gram matrix");
}

Eigen::VectorXd SpanProjector::residual(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd coeffs = gram_.solve(B_->transpose() * (*M_ * x));
  return x - *B_ * coeffs;
}

int enrichment_block_size(int n_coarse, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw std::invalid_argument("keep_fraction must lie in (0, 1]");
  }
  // Guard against 0.125 * 64 landing a hair above 8.
  return std::min(n_coarse, static_cast<int>(std::ceil(keep_fraction * n_coarse - 1e-9)));
}

EnrichedSpace enrich(const FineOperators& ops, const Mesh& coarse, const SnapshotSet& snapshots,
                     const EnrichOptions& options) {
  const BasisProblem problem(ops, coarse);
  const double t0 = snapshots.times.empty() ? 0.0 : snapshots.times.front();
  EnrichedSpace space;
  space.coarse = coarse;
  space.fine = ops.mesh;
  space.blocks.push_back(build_space(problem, t0, options.basis));

  const auto selected = snapshots.selected_times();
  std::vector<MultiscaleBasis> candidates(selected.size());
  for (std::size_t b = 0; b < selected.size(); ++b) {
    try {
      candidates[b] = build_space(problem, selected[b], options.basis);
    } catch (const Error& e) {
      throw Error("enrichment basis at t=" + std::to_string(selected[b]) + ": " + e.what());
    }
  }

  const SpanProjector projector(space.blocks[0].functions, ops.M);
  const int keep = enrichment_block_size(coarse.n_dofs(), options.keep_fraction);
  for (auto& candidate : candidates) {
    const int n = candidate.size();
    std::vector<double> residual_norm(n);
    parallel_for(n, options.basis.workers, [&](int i) {
      const Eigen::VectorXd r = projector.residual(Eigen::VectorXd(candidate.functions.col(i)));
      residual_norm[i] = std::sqrt(std::max(0.0, r.dot(ops.M * r)));
    });
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return residual_norm[a] > residual_norm[b]; });
    order.resize(keep);
    std::sort(order.begin(), order.end());

    MultiscaleBasis reduced;
    reduced.coarse = candidate.coarse;
    reduced.fine = candidate.fine;
    reduced.build_time = candidate.build_time;
    reduced.l_star = candidate.l_star;
    reduced.functions = BasisMatrix(candidate.functions.rows(), keep);
    std::vector<Eigen::Triplet<double>> entries;
    for (int k = 0; k < keep; ++k) {
      for (BasisMatrix::InnerIterator it(candidate.functions, order[k]); it; ++it) {
        entries.emplace_back(static_cast<int>(it.row()), k, it.value());
      }
      if (!candidate.patches.empty()) reduced.patches.push_back(candidate.patches[order[k]]);
    }
    reduced.functions.setFromTriplets(entries.begin(), entries.end());
    reduced.functions.makeCompressed();
    space.blocks.push_back(std::move(reduced));
  }

  int total = 0;
  for (const auto& block : space.blocks) {
    space.kept_counts.push_back(block.size());
    total += block.size();
  }
  space.functions = BasisMatrix(ops.mesh.n_dofs(), total);
  std::vector<Eigen::Triplet<double>> entries;
  int col = 0;
  for (const auto& block : space.blocks) {
    for (int k = 0; k < block.size(); ++k, ++col) {
      for (BasisMatrix::InnerIterator it(block.functions, k); it; ++it) {
        entries.emplace_back(static_cast<int>(it.row()), col, it.value());
      }
    }
  }
  space.functions.setFromTriplets(entries.begin(), entries.end());
  space.functions.makeCompressed();
  return space;
}

EnrichedSpace postprocess(const EnrichedSpace& space, const SparseMatrix& fine_M, double drop_tol) {
  EnrichedSpace out = space;
  out.postprocessed = true;
  const MultiscaleBasis& initial = space.blocks.front();
  const int n_fine = static_cast<int>(initial.functions.rows());
  const auto& k = simd::kernels();

  std::vector<Eigen::VectorXd> kept;        // orthonormal enrichment functions
  std::vector<Eigen::VectorXd> kept_mass;   // M * kept[i]
  out.kept_counts.assign(space.blocks.size(), 0);
  out.kept_counts[0] = initial.size();

  if (space.blocks.size() > 1) {
    const SpanProjector projector(initial.functions, fine_M);
    for (std::size_t b = 1; b < space.blocks.size(); ++b) {
      const auto& block = space.blocks[b];
      for (int i = 0; i < block.size(); ++i) {
        const Eigen::VectorXd phi = Eigen::VectorXd(block.functions.col(i));
        const double original = std::sqrt(std::max(0.0, phi.dot(fine_M * phi)));
        Eigen::VectorXd v = projector.residual(projector.residual(phi));
        for (int pass = 0; pass < 2; ++pass) {
          for (std::size_t q = 0; q < kept.size(); ++q) {
            const double c = k.dot({kept_mass[q].data(), static_cast<std::size_t>(n_fine)},
                                   {v.data(), static_cast<std::size_t>(n_fine)});
            k.axpy(-c, {kept[q].data(), static_cast<std::size_t>(n_fine)},
                   {v.data(), static_cast<std::size_t>(n_fine)});
          }
        }
        const Eigen::VectorXd Mv = fine_M * v;
        const double norm = std::sqrt(std::max(0.0, v.dot(Mv)));
        if (!(norm > drop_tol * original)) continue;
        kept.push_back(v / norm);
        kept_mass.push_back(Mv / norm);
        ++out.kept_counts[b];
      }
    }
  }

  std::vector<Eigen::Triplet<double>> entries;
  for (int c = 0; c < initial.size(); ++c) {
    for (BasisMatrix::InnerIterator it(initial.functions, c); it; ++it) {
      entries.emplace_back(static_cast<int>(it.row()), c, it.value());
    }
  }
  for (std::size_t q = 0; q < kept.size(); ++q) {
    const int c = initial.size() + static_cast<int>(q);
    for (int s = 0; s < n_fine; ++s) {
      if (kept[q][s] != 0.0) entries.emplace_back(s, c, kept[q][s]);
    }
  }
  out.functions = BasisMatrix(n_fine, initial.size() + static_cast<int>(kept.size()));
  out.functions.setFromTriplets(entries.begin(), entries.end());
  out.functions.makeCompressed();
  return out;
}

ContinuityProbe continuity_probe(const BasisProblem& problem, double t1, double t2,
                                 const BasisOptions& options, int grid_n) {
  const MultiscaleBasis a = build_space(problem, t1, options);
  const MultiscaleBasis b = build_space(problem, t2, options);
  ContinuityProbe probe;
  const BasisMatrix diff = a.functions - b.functions;
  for (int c = 0; c < diff.outerSize(); ++c) {
    for (BasisMatrix::InnerIterator it(diff, c); it; ++it) {
      probe.basis_distance = std::max(probe.basis_distance, std::abs(it.value()));
    }
  }
  const auto& spec = problem.operators().spec;
  probe.drive_distance = v2_distance(spec, t1, t2, sup_grid_for(spec, grid_n));
  return probe;
}

}  // namespace msfem
