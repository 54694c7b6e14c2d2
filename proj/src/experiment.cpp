#include "msfem/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "msfem/container.hpp"
#include "msfem/fem_assembly.hpp"
#include "msfem/parallel.hpp"
#include "msfem/simd/kernels.hpp"

namespace msfem {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

BasisOptions basis_options(const ExperimentConfig& config, int workers) {
  BasisOptions options;
  options.l_star = config.l_star ? *config.l_star : kDefaultLStar;
  options.workers = workers;
  return options;
}

}  // namespace

SpaceBuild build_method_space(const FineOperators& fine_ops, Method method, int coarse_n,
                              const ExperimentConfig& config, int workers) {
  if (method == Method::FEM) throw std::invalid_argument("build_method_space: FEM has no multiscale space");
  const Mesh coarse = build_mesh(fine_ops.mesh.dim, coarse_n);
  const BasisOptions options = basis_options(config, workers);
  SpaceBuild out;
  out.method = method;
  out.coarse_n = coarse_n;

  if (method == Method::MsFEM) {
    BuildReport report;
    MultiscaleBasis basis = build_space(fine_ops, coarse, 0.0, options, &report);
    out.l_star = basis.l_star;
    out.basis = std::move(basis.functions);
    out.kept_counts = {static_cast<int>(out.basis->cols())};
    out.block_times = {0.0};
    out.warnings = report.warnings;
    return out;
  }

  const PotentialSpec& spec = fine_ops.spec;
  SnapshotSet snapshots;
  if (config.enrichment == EnrichmentMode::none || !spec.time_dependent()) {
    if (config.enrichment != EnrichmentMode::none) {
      out.warnings.emplace_back("potential has no drive; enrichment selection is empty");
    }
    snapshots.times = {0.0};
    snapshots.remaining = {0};
  } else {
    const auto times = period_snapshots(spec, config.snapshots, 0.0);
    const double delta = config.delta ? *config.delta : default_delta(spec, times);
    snapshots = greedy_select(spec, times, delta,
                              config.enrichment == EnrichmentMode::greedy ? GreedyMode::full : GreedyMode::one_step);
  }
  EnrichOptions enrich_options;
  enrich_options.basis = options;
  enrich_options.keep_fraction = config.keep_fraction;
  const EnrichedSpace raw = enrich(fine_ops, coarse, snapshots, enrich_options);
  const EnrichedSpace space = postprocess(raw, fine_ops.M, config.drop_tol);
  out.l_star = space.blocks.front().l_star;
  out.basis = space.functions;
  out.kept_counts = space.kept_counts;
  for (const auto& block : space.blocks) out.block_times.push_back(block.build_time);
  out.snapshots = std::move(snapshots);
  return out;
}

void save_space(const std::filesystem::path& path, const SpaceBuild& space, const ExperimentConfig& config) {
  if (!space.basis) throw Error("save_space: FEM cells have no basis to save");
  Archive archive;
  archive.header["kind"] = "basis";
  archive.header["method"] = method_name(space.method);
  archive.header["config"] = config.to_json();
  archive.header["coarse_n"] = space.coarse_n;
  archive.header["fine_n"] = config.fine;
  archive.header["dim"] = config.dim;
  archive.header["l_star"] = space.l_star;
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t b = 0; b < space.block_times.size(); ++b) {
    blocks.push_back({{"build_time", space.block_times[b]},
                      {"kept", b < space.kept_counts.size() ? space.kept_counts[b] : 0}});
  }
  archive.header["blocks"] = blocks;
  if (space.snapshots) {
    archive.header["selected_times"] = space.snapshots->selected_times();
    archive.header["delta"] = space.snapshots->delta;
  }
  put_sparse(archive, "functions", *space.basis);
  write_archive(path, archive);
}

MethodRun run_method(const FineOperators& ops, const BasisMatrix* basis, double dt,
                     const std::vector<double>& times, int stride, double sigma) {
  const CoarseSystem system = project_system(ops, basis);
  const WaveState psi0 = project_initial_to_basis(gaussian_packet(ops.mesh, sigma), basis, ops.M, 0.0);
  const auto record_steps = grid_steps(times, 0.0, dt);
  const int last = record_steps.empty() ? 0 : *std::max_element(record_steps.begin(), record_steps.end());

  MethodRun run;
  run.basis_dim = system.dim();
  run.trajectory.mesh = ops.mesh;
  run.trajectory.times = times;
  run.trajectory.states.resize(times.size());
  EvolveOptions options;
  options.stride = 1;
  options.observer = [&](int k, const WaveState& state, const Eigen::VectorXcd&) {
    const bool trace = k % stride == 0 || k == last;
    const bool record = std::find(record_steps.begin(), record_steps.end(), k) != record_steps.end();
    if (!trace && !record) return;
    const Eigen::VectorXcd fine = reconstruct(state.coeffs, basis);
    if (trace) run.trace.push_back({state.t, total_mass(fine, ops.M), total_energy(fine, ops, state.t)});
    for (std::size_t i = 0; i < record_steps.size(); ++i) {
      if (record_steps[i] == k) run.trajectory.states[i] = fine;
    }
  };
  const auto result = evolve(system, psi0, dt, last * dt, options);
  run.max_mass_deviation = result.max_mass_deviation;
  run.trajectory.max_mass_deviation = result.max_mass_deviation;
  return run;
}

bool ExperimentResult::all_ok() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok; });
}

ReferenceResult compute_reference(const ExperimentConfig& config, const RunOptions& options) {
  const PotentialSpec spec = config.potential();
  const auto times = normalized_times(config.series_times, config.T);
  if (config.reference == Method::FEM) {
    ReferenceOptions ref_options;
    ref_options.cache_dir = options.cache_dir;
    ref_options.sigma = config.sigma;
    return solve_reference(spec, config.reference_fine, config.reference_dt, config.T, times, ref_options);
  }
  ReferenceResult result;
  result.params = {{"solver", "EnMsFEM"},
                   {"potential", spec.descriptor},
                   {"epsilon", spec.epsilon},
                   {"E0", spec.E0},
                   {"fine_n", config.reference_fine},
                   {"coarse_n", config.reference_coarse},
                   {"l_star", config.l_star ? nlohmann::json(*config.l_star) : nlohmann::json("auto")},
                   {"enrichment", enrichment_mode_name(config.enrichment)},
                   {"keep_fraction", config.keep_fraction},
                   {"delta", config.delta ? nlohmann::json(*config.delta) : nlohmann::json("auto")},
                   {"snapshots", config.snapshots},
                   {"drop_tol", config.drop_tol},
                   {"dt", config.reference_dt},
                   {"T", config.T},
                   {"times", times},
                   {"sigma", config.sigma}};
  std::optional<ReferenceCache> cache;
  if (options.cache_dir) cache.emplace(*options.cache_dir);
  if (cache) {
    if (auto hit = cache->load(result.params)) {
      result.trajectory = std::move(*hit);
      result.from_cache = true;
      return result;
    }
  }
  const FineOperators ops = assemble_fine_operators(build_mesh(spec.dim, config.reference_fine), spec);
  const SpaceBuild space = build_method_space(ops, Method::EnMsFEM, config.reference_coarse, config, config.workers);
  const int total_steps = step_count(0.0, config.T, config.reference_dt);
  result.trajectory = run_method(ops, &*space.basis, config.reference_dt, times, total_steps + 1, config.sigma).trajectory;
  if (cache) cache->store(result.params, result.trajectory);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentResult result;
  result.validation = validate_config(config);
  if (!result.validation.ok()) {
    std::string msg = "invalid config:";
    for (const auto& e : result.validation.errors) msg += "\n  " + e;
    throw Error(msg);
  }
  const ExperimentConfig& c = result.validation.config;
  if (c.full_scale && !options.allow_full_scale) {
    throw Error("config '" + c.name + "' is marked full_scale; pass --allow-full-scale to run it");
  }
  const PotentialSpec spec = c.potential();
  const auto times = normalized_times(c.series_times, c.T);

  const auto ref_start = Clock::now();
  const ReferenceResult reference = compute_reference(c, options);
  result.reference = {{"params", reference.params},
                      {"from_cache", reference.from_cache},
                      {"seconds", seconds_since(ref_start)},
                      {"max_mass_deviation", reference.trajectory.max_mass_deviation}};
  if (options.cache_dir) result.reference["cache_file"] = ReferenceCache(*options.cache_dir).path_for(reference.params).string();
  if (reference.self_convergence) result.reference["self_convergence"] = *reference.self_convergence;
  const Mesh& ref_mesh = reference.trajectory.mesh;
  const SparseMatrix ref_S = assemble_stiffness(ref_mesh);
  const SparseMatrix ref_M = assemble_mass(ref_mesh);

  std::optional<FineOperators> fine_ops;
  const bool needs_fine = std::any_of(c.methods.begin(), c.methods.end(), [](Method m) { return m != Method::FEM; });
  if (needs_fine) fine_ops = assemble_fine_operators(build_mesh(spec.dim, c.fine), spec);

  for (Method m : c.methods) {
    for (int n : c.coarse) {
      CellResult cell;
      cell.method = m;
      cell.coarse_n = n;
      result.cells.push_back(std::move(cell));
    }
  }
  const int outer = std::min(resolve_workers(c.workers), static_cast<int>(result.cells.size()));
  const int inner = outer > 1 ? 1 : c.workers;

  parallel_for(static_cast<int>(result.cells.size()), outer, [&](int index) {
    CellResult& cell = result.cells[index];
    try {
      const auto offline_start = Clock::now();
      std::optional<FineOperators> coarse_ops;
      const FineOperators* ops = nullptr;
      const BasisMatrix* basis = nullptr;
      SpaceBuild space;
      if (cell.method == Method::FEM) {
        coarse_ops = assemble_fine_operators(build_mesh(spec.dim, cell.coarse_n), spec);
        ops = &*coarse_ops;
      } else {
        ops = &*fine_ops;
        space = build_method_space(*ops, cell.method, cell.coarse_n, c, inner);
        basis = &*space.basis;
        cell.l_star = space.l_star;
        cell.details["warnings"] = space.warnings;
        cell.details["kept_counts"] = space.kept_counts;
        cell.details["block_times"] = space.block_times;
        if (space.snapshots) {
          cell.details["selected_times"] = space.snapshots->selected_times();
          cell.details["delta"] = space.snapshots->delta;
        }
      }
      cell.offline_seconds = seconds_since(offline_start);

      const auto online_start = Clock::now();
      const MethodRun run = run_method(*ops, basis, c.dt, times, c.stride, c.sigma);
      cell.online_seconds = seconds_since(online_start);
      cell.basis_dim = run.basis_dim;
      cell.max_mass_deviation = run.max_mass_deviation;
      cell.trace = run.trace;

      for (std::size_t i = 0; i < times.size(); ++i) {
        const Eigen::VectorXcd& state = run.trajectory.states[i];
        const Eigen::VectorXcd lifted = prolongate(state, ops->mesh, ref_mesh);
        ErrorReport report = relative_errors(lifted, reference.trajectory.at(times[i]), ref_S, ref_M);
        report.method = method_name(cell.method);
        report.example = c.example;
        report.epsilon = c.epsilon;
        report.H = 1.0 / cell.coarse_n;
        report.l_star = cell.l_star;
        report.dt = c.dt;
        report.t = times[i];
        report.basis_dim = cell.basis_dim;
        report.mass = total_mass(state, ops->M);
        report.energy = total_energy(state, *ops, times[i]);
        cell.reports.push_back(report);
      }
      const Eigen::VectorXcd& final_state = run.trajectory.states.back();
      cell.mesh = ops->mesh;
      cell.density = position_density(final_state);
      cell.energy = energy_density(final_state, spec, times.back(), ops->mesh);
      cell.ok = true;
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });
  return result;
}

namespace {

constexpr const char* kErrorHeader = "method,example,epsilon,H,l_star,dt,t,rel_L2,rel_H1,mass,energy\n";

void error_row(std::ostringstream& out, const ErrorReport& r) {
  out << r.method << ',' << r.example << ',' << num(r.epsilon) << ',' << num(r.H) << ',' << r.l_star << ','
      << num(r.dt) << ',' << num(r.t) << ',' << num(r.rel_L2) << ',' << num(r.rel_H1) << ',' << num(r.mass)
      << ',' << num(r.energy) << '\n';
}

}  // namespace

std::string error_vs_H_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << kErrorHeader;
  for (const auto& cell : result.cells) {
    if (cell.ok && !cell.reports.empty()) error_row(out, cell.reports.back());
  }
  return out.str();
}

std::string error_vs_time_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << kErrorHeader;
  for (const auto& cell : result.cells) {
    if (!cell.ok) continue;
    for (const auto& r : cell.reports) error_row(out, r);
  }
  return out.str();
}

std::string mass_energy_csv(const ExperimentResult& result) {
  const auto& c = result.validation.config;
  std::ostringstream out;
  out << "method,example,epsilon,H,l_star,dt,t,mass,energy\n";
  for (const auto& cell : result.cells) {
    if (!cell.ok) continue;
    for (const auto& p : cell.trace) {
      out << method_name(cell.method) << ',' << c.example << ',' << num(c.epsilon) << ',' << num(1.0 / cell.coarse_n)
          << ',' << cell.l_star << ',' << num(c.dt) << ',' << num(p.t) << ',' << num(p.mass) << ','
          << num(p.energy) << '\n';
    }
  }
  return out.str();
}

std::string density_profiles_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "method,H,field,x,y,value\n";
  for (const auto& cell : result.cells) {
    if (!cell.ok) continue;
    const std::string prefix = method_name(cell.method) + ',' + num(1.0 / cell.coarse_n) + ',';
    for (int i = 0; i < cell.mesh.n_dofs(); ++i) {
      const auto& x = cell.mesh.vertices[i];
      out << prefix << "position," << num(x[0]) << ',' << num(x[1]) << ',' << num(cell.density[i]) << '\n';
    }
    const auto centroids = element_centroids(cell.mesh);
    for (int e = 0; e < cell.mesh.n_elements(); ++e) {
      out << prefix << "energy," << num(centroids[e][0]) << ',' << num(centroids[e][1]) << ','
          << num(cell.energy[e]) << '\n';
    }
  }
  return out.str();
}

nlohmann::json manifest(const ExperimentResult& result) {
  const auto& v = result.validation;
  nlohmann::json j;
  j["config"] = v.config.to_json();
  j["V0"] = v.V0;
  j["warnings"] = v.warnings;
  nlohmann::json meshes = nlohmann::json::array();
  for (const auto& m : v.meshes) {
    meshes.push_back({{"coarse", m.coarse}, {"H", m.H}, {"l_star", m.l_star}, {"resolution_ratio", m.resolution_ratio}});
  }
  j["meshes"] = meshes;
  j["reference"] = result.reference;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : result.cells) {
    nlohmann::json e = {{"method", method_name(cell.method)},
                        {"coarse", cell.coarse_n},
                        {"H", 1.0 / cell.coarse_n},
                        {"ok", cell.ok},
                        {"l_star", cell.l_star},
                        {"basis_dim", cell.basis_dim},
                        {"offline_seconds", cell.offline_seconds},
                        {"online_seconds", cell.online_seconds},
                        {"max_mass_deviation", cell.max_mass_deviation},
                        {"details", cell.details}};
    if (!cell.ok) e["error"] = cell.error;
    cells.push_back(e);
  }
  j["cells"] = cells;
  j["simd"] = std::string(simd::isa_name(simd::kernels().isa));
  j["outputs"] = {"error_vs_H.csv", "error_vs_time.csv", "mass_energy.csv", "density_profiles.csv"};
  j["status"] = result.all_ok() ? "ok" : "failed_cells";
  return j;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << text;
  };
  write("error_vs_H.csv", error_vs_H_csv(result));
  write("error_vs_time.csv", error_vs_time_csv(result));
  write("mass_energy.csv", mass_energy_csv(result));
  write("density_profiles.csv", density_profiles_csv(result));
  write("manifest.json", manifest(result).dump(2) + "\n");
}

}  // namespace msfem
