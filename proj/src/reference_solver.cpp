#include "msfem/reference_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <zlib.h>

#include "msfem/container.hpp"
#include "msfem/fem_assembly.hpp"
#include "msfem/observables.hpp"

namespace msfem {

const Eigen::VectorXcd& Trajectory::at(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return states[i];
  }
  throw Error("trajectory has no state at t=" + std::to_string(t));
}

std::vector<double> normalized_times(std::vector<double> times, double T) {
  times.push_back(T);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }),
              times.end());
  return times;
}

std::vector<int> grid_steps(const std::vector<double>& times, double t0, double dt) {
  std::vector<int> steps;
  steps.reserve(times.size());
  for (double t : times) {
    try {
      steps.push_back(step_count(t0, t, dt));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("time " + std::to_string(t) + " is not on the step grid of dt=" +
                                  std::to_string(dt));
    }
  }
  return steps;
}

Trajectory record_trajectory(const CoarseSystem& system, const WaveState& psi0, const BasisMatrix* basis,
                             const Mesh& fine, double dt, const std::vector<double>& times) {
  Trajectory out;
  out.mesh = fine;
  out.times = times;
  out.states.resize(times.size());
  const auto steps = grid_steps(times, psi0.t, dt);
  const int last = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
  EvolveOptions options;
  options.stride = 1;
  options.observer = [&](int k, const WaveState& state, const Eigen::VectorXcd&) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (steps[i] == k) out.states[i] = reconstruct(state.coeffs, basis);
    }
  };
  const auto result = evolve(system, psi0, dt, psi0.t + last * dt, options);
  out.max_mass_deviation = result.max_mass_deviation;
  return out;
}

std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("MSFEM_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  return ".msfem-cache";
}

ReferenceCache::ReferenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ReferenceCache::key_for(const nlohmann::json& params) {
  const std::string text = params.dump();
  const auto crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(text.data()),
                         static_cast<uInt>(text.size()));
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08lx-%zu", static_cast<unsigned long>(crc), text.size());
  return buf;
}

std::filesystem::path ReferenceCache::path_for(const nlohmann::json& params) const {
  return dir_ / ("ref-" + key_for(params) + ".msfem");
}

std::optional<Trajectory> ReferenceCache::load(const nlohmann::json& params, nlohmann::json* extra) const {
  const auto path = path_for(params);
  if (!std::filesystem::exists(path)) return std::nullopt;
  Archive archive;
  try {
    archive = read_archive(path);
  } catch (const Error&) {
    return std::nullopt;  // corrupt or unreadable entries are recomputed
  }
  if (archive.header.value("params", nlohmann::json()) != params) return std::nullopt;
  try {
    Trajectory out;
    const int dim = archive.header.at("dim").get<int>();
    out.mesh = build_mesh(dim, archive.header.at("n").get<int>());
    out.times = archive.f64.at("times");
    out.max_mass_deviation = archive.header.at("max_mass_deviation").get<double>();
    for (std::size_t i = 0; i < out.times.size(); ++i) {
      out.states.push_back(get_vector(archive, "state" + std::to_string(i)));
      if (out.states.back().size() != out.mesh.n_dofs()) return std::nullopt;
    }
    if (extra != nullptr) *extra = archive.header.value("extra", nlohmann::json::object());
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ReferenceCache::store(const nlohmann::json& params, const Trajectory& trajectory,
                           const nlohmann::json& extra) const {
  Archive archive;
  archive.header["kind"] = "reference";
  archive.header["params"] = params;
  archive.header["dim"] = trajectory.mesh.dim;
  archive.header["n"] = trajectory.mesh.n;
  archive.header["max_mass_deviation"] = trajectory.max_mass_deviation;
  archive.header["extra"] = extra;
  archive.f64["times"] = trajectory.times;
  for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
    put_vector(archive, "state" + std::to_string(i), trajectory.states[i]);
  }
  write_archive(path_for(params), archive);
}

namespace {

Trajectory run_fem(const PotentialSpec& spec, int n, double dt, const std::vector<double>& times, double sigma) {
  const Mesh mesh = build_mesh(spec.dim, n);
  const FineOperators ops = assemble_fine_operators(mesh, spec);
  const CoarseSystem system = project_system(ops, nullptr);
  const WaveState psi0{gaussian_packet(mesh, sigma), 0.0};
  return record_trajectory(system, psi0, nullptr, mesh, dt, times);
}

}  // namespace

ReferenceResult solve_reference(const PotentialSpec& spec, int fine_n, double dt, double T,
                                std::vector<double> times, const ReferenceOptions& options) {
  times = normalized_times(std::move(times), T);
  step_count(0.0, T, dt);
  ReferenceResult result;
  result.params = {{"solver", "FEM"},  {"potential", spec.descriptor}, {"epsilon", spec.epsilon},
                   {"E0", spec.E0},     {"fine_n", fine_n},             {"dt", dt},
                   {"T", T},            {"times", times},               {"sigma", options.sigma},
                   {"self_convergence", options.self_convergence}};
  std::optional<ReferenceCache> cache;
  if (options.cache_dir) cache.emplace(*options.cache_dir);
  if (cache) {
    nlohmann::json extra;
    if (auto hit = cache->load(result.params, &extra)) {
      result.trajectory = std::move(*hit);
      result.from_cache = true;
      if (extra.contains("self_convergence")) result.self_convergence = extra["self_convergence"].get<double>();
      return result;
    }
  }
  result.trajectory = run_fem(spec, fine_n, dt, times, options.sigma);
  nlohmann::json extra = nlohmann::json::object();
  if (options.self_convergence) {
    const auto finer = run_fem(spec, 2 * fine_n, 0.5 * dt, {T}, options.sigma);
    const Mesh& mesh2 = finer.mesh;
    const Eigen::VectorXcd coarse_up = prolongate(result.trajectory.at(T), result.trajectory.mesh, mesh2);
    const auto report = relative_errors(coarse_up, finer.states.front(), assemble_stiffness(mesh2),
                                        assemble_mass(mesh2));
    result.self_convergence = report.rel_L2;
    extra["self_convergence"] = report.rel_L2;
  }
  if (cache) cache->store(result.params, result.trajectory, extra);
  return result;
}

Trajectory solve_standard_fem_coarse(const PotentialSpec& spec, int coarse_n, double dt, double T,
                                     std::vector<double> times, double sigma) {
  times = normalized_times(std::move(times), T);
  step_count(0.0, T, dt);
  return run_fem(spec, coarse_n, dt, times, sigma);
}

}  // namespace msfem
