#pragma once

#include <vector>

#include "msfem/msbasis.hpp"

namespace msfem {

/// Relative tolerance under which two greedy scores count as tied; ties go to
/// the earliest time instance.
inline constexpr double kTieTolerance = 1e-12;

struct SnapshotSet {
  std::vector<double> times;   // t_0 < t_1 < ... < t_{N_t}
  std::vector<int> selected;   // indices into times, in selection order
  std::vector<int> remaining;  // sorted indices not selected
  double delta = 0.0;

  std::vector<double> selected_times() const;
};

enum class GreedyMode { one_step, full };

/// count uniform instances t0 + k * period / count, k = 0..count-1, covering
/// one period of the drive.
std::vector<double> period_snapshots(const PotentialSpec& spec, int count, double t0 = 0.0);

/// 0.1 * max_l |v2(., t_l)|_inf.
double default_delta(const PotentialSpec& spec, const std::vector<double>& times, int grid_n = 0);

/// Greedy choice of drive snapshots: first the instance (l > 0) of largest
/// |v2|_inf, then repeatedly the remaining instance farthest (in sup norm of
/// v2) from every selected one, until all remaining instances lie within delta
/// of the selection. grid_n = 0 uses the default sampling grid.
SnapshotSet greedy_select(const PotentialSpec& spec, const std::vector<double>& times, double delta,
                          GreedyMode mode = GreedyMode::full, int grid_n = 0);

struct EnrichedSpace {
  Mesh coarse;
  Mesh fine;
  std::vector<MultiscaleBasis> blocks;  // blocks[0] is the initial-time basis
  std::vector<int> kept_counts;         // functions retained per block
  BasisMatrix functions;                // concatenated coefficients of the space
  bool postprocessed = false;

  int dimension() const { return static_cast<int>(functions.cols()); }
};

struct EnrichOptions {
  BasisOptions basis;
  double keep_fraction = 0.125;
};

/// Number of functions kept from one enrichment block: ceil(keep_fraction * N_H).
int enrichment_block_size(int n_coarse, double keep_fraction);

/// Builds the initial-time basis plus one basis per selected snapshot, keeps
/// from each snapshot basis the functions with the largest L2 residual
/// against span(initial basis), and concatenates the blocks.
EnrichedSpace enrich(const FineOperators& ops, const Mesh& coarse, const SnapshotSet& snapshots,
                     const EnrichOptions& options = {});

/// Orthogonalizes enrichment functions (fine L2 inner product) against the
/// initial basis and each other; functions whose residual falls below
/// drop_tol times their original norm are dropped. The initial basis is left
/// untouched so it stays contained in the space.
EnrichedSpace postprocess(const EnrichedSpace& space, const SparseMatrix& fine_M, double drop_tol = 1e-8);

struct ContinuityProbe {
  double basis_distance = 0.0;  // max |phi_i(., t1) - phi_i(., t2)| over i and fine dofs
  double drive_distance = 0.0;  // max |v2(., t1) - v2(., t2)| over the sampling grid
};

ContinuityProbe continuity_probe(const BasisProblem& problem, double t1, double t2,
                                 const BasisOptions& options = {}, int grid_n = 0);

/// Residuals of columns of X after L2 projection onto span(B).
class SpanProjector {
 public:
  SpanProjector(const BasisMatrix& B, const SparseMatrix& fine_M);
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;

 private:
  const BasisMatrix* B_;
  const SparseMatrix* M_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> gram_;
};

}  // namespace msfem
