#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msfem/evolution.hpp"

namespace msfem {

/// Fine-grid states of one run at requested times.
struct Trajectory {
  Mesh mesh;
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;
  double max_mass_deviation = 0.0;

  /// State at time t; throws if t was not recorded.
  const Eigen::VectorXcd& at(double t) const;
};

/// Step index of each time on the grid t0 + k dt; throws for off-grid times.
std::vector<int> grid_steps(const std::vector<double>& times, double t0, double dt);

/// Evolves `system` from psi0 and records reconstructed fine states at `times`
/// (which must lie on the step grid).
Trajectory record_trajectory(const CoarseSystem& system, const WaveState& psi0, const BasisMatrix* basis,
                             const Mesh& fine, double dt, const std::vector<double>& times);

/// Cache directory: $MSFEM_CACHE_DIR if set, else ".msfem-cache".
std::filesystem::path default_cache_dir();

/// One archive per key. Entries carry their full parameter set; a parameter
/// mismatch or a failed checksum reads as a miss.
class ReferenceCache {
 public:
  explicit ReferenceCache(std::filesystem::path dir);

  static std::string key_for(const nlohmann::json& params);
  std::filesystem::path path_for(const nlohmann::json& params) const;

  std::optional<Trajectory> load(const nlohmann::json& params, nlohmann::json* extra = nullptr) const;
  void store(const nlohmann::json& params, const Trajectory& trajectory,
             const nlohmann::json& extra = nlohmann::json::object()) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct ReferenceOptions {
  std::optional<std::filesystem::path> cache_dir;  // nullopt disables caching
  double sigma = 0.2;                              // initial packet width
  /// Also solve at (2 fine_n, dt / 2) and store the relative L2 change at T.
  bool self_convergence = false;
};

struct ReferenceResult {
  Trajectory trajectory;
  bool from_cache = false;
  std::optional<double> self_convergence;  // relative L2 change at T
  nlohmann::json params;
};

/// Standard P1 FEM on the fine mesh with Crank-Nicolson, started from the
/// Gaussian packet, recorded at `times` (T is always included).
ReferenceResult solve_reference(const PotentialSpec& spec, int fine_n, double dt, double T,
                                std::vector<double> times, const ReferenceOptions& options = {});

/// P1 FEM baseline on a coarse mesh; same discretization as solve_reference
/// without caching.
Trajectory solve_standard_fem_coarse(const PotentialSpec& spec, int coarse_n, double dt, double T,
                                     std::vector<double> times, double sigma = 0.2);

/// Sorted, de-duplicated union of times and {T}.
std::vector<double> normalized_times(std::vector<double> times, double T);

}  // namespace msfem
