#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msfem/config.hpp"
#include "msfem/observables.hpp"
#include "msfem/reference_solver.hpp"

namespace msfem {

/// Approximation space of one (method, coarse mesh) cell. basis == nullopt
/// means plain P1 FEM on the coarse mesh.
struct SpaceBuild {
  Method method = Method::FEM;
  int coarse_n = 0;
  int l_star = 0;
  std::optional<BasisMatrix> basis;
  std::optional<SnapshotSet> snapshots;
  std::vector<int> kept_counts;
  std::vector<double> block_times;
  std::vector<std::string> warnings;
};

/// Offline stage for MsFEM / EnMsFEM on the fine operators.
SpaceBuild build_method_space(const FineOperators& fine_ops, Method method, int coarse_n,
                              const ExperimentConfig& config, int workers = 0);

/// Writes basis coefficients plus the enrichment block manifest.
void save_space(const std::filesystem::path& path, const SpaceBuild& space, const ExperimentConfig& config);

struct MethodRun {
  Trajectory trajectory;  // states on the method's own fine grid
  std::vector<TracePoint> trace;
  double max_mass_deviation = 0.0;
  int basis_dim = 0;
};

/// Online stage: projects, evolves with dt from the Gaussian packet and
/// records states at `times` plus mass/energy every `stride` steps.
MethodRun run_method(const FineOperators& ops, const BasisMatrix* basis, double dt,
                     const std::vector<double>& times, int stride, double sigma);

struct CellResult {
  Method method = Method::FEM;
  int coarse_n = 0;
  int l_star = 0;
  int basis_dim = 0;
  bool ok = false;
  std::string error;
  double offline_seconds = 0.0;
  double online_seconds = 0.0;
  double max_mass_deviation = 0.0;
  std::vector<ErrorReport> reports;  // one per recorded time, T last
  std::vector<TracePoint> trace;
  Mesh mesh;  // grid of the density profiles
  Eigen::VectorXd density;
  Eigen::VectorXd energy;
  nlohmann::json details = nlohmann::json::object();
};

struct RunOptions {
  std::optional<std::filesystem::path> cache_dir;  // nullopt disables caching
  bool allow_full_scale = false;
};

struct ExperimentResult {
  ValidationReport validation;
  std::vector<CellResult> cells;
  nlohmann::json reference = nlohmann::json::object();

  bool all_ok() const;
};

/// Throws Error for an invalid config or a failed reference; per-cell
/// failures are recorded in the result.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Reference trajectory for the config (FEM or EnMsFEM), through the cache.
ReferenceResult compute_reference(const ExperimentConfig& config, const RunOptions& options);

std::string error_vs_H_csv(const ExperimentResult& result);
std::string error_vs_time_csv(const ExperimentResult& result);
std::string mass_energy_csv(const ExperimentResult& result);
std::string density_profiles_csv(const ExperimentResult& result);
nlohmann::json manifest(const ExperimentResult& result);

/// Writes the four CSVs and manifest.json into `dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace msfem
