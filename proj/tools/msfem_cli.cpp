// Command-line entry point: run, validate, basis, reference.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "msfem/experiment.hpp"
#include "msfem/fem_assembly.hpp"

namespace {

using namespace msfem;

void print_validation(const ValidationReport& report) {
  for (const auto& m : report.meshes) {
    std::printf("  H=1/%-5d l*=%-3d sqrt(V0)H/eps=%.3g\n", m.coarse, m.l_star, m.resolution_ratio);
  }
  for (const auto& w : report.warnings) std::printf("warning: %s\n", w.c_str());
  for (const auto& e : report.errors) std::printf("error: %s\n", e.c_str());
}

ExperimentConfig load_with_overrides(const std::string& path, const std::string& output, int workers) {
  ExperimentConfig config = load_config(path);
  if (!output.empty()) config.output = output;
  if (workers > 0) config.workers = workers;
  return config;
}

int cmd_validate(const std::string& path) {
  const auto report = validate_config(load_config(path));
  std::printf("config %s: V0=%.6g\n", path.c_str(), report.V0);
  print_validation(report);
  if (report.ok()) std::printf("%s\n", report.config.to_json().dump(2).c_str());
  return report.ok() ? 0 : 1;
}

int cmd_run(const std::string& path, const std::string& output, int workers, bool allow_full_scale) {
  const ExperimentConfig config = load_with_overrides(path, output, workers);
  RunOptions options;
  options.cache_dir = default_cache_dir();
  options.allow_full_scale = allow_full_scale;
  const ExperimentResult result = run_experiment(config, options);
  print_validation(result.validation);
  const auto dir = result.validation.config.output;
  write_outputs(result, dir);
  for (const auto& cell : result.cells) {
    if (cell.ok) {
      const auto& last = cell.reports.back();
      std::printf("%-8s H=1/%-5d dim=%-6d rel_L2=%.4e rel_H1=%.4e mass_dev=%.2e offline=%.2fs online=%.2fs\n",
                  method_name(cell.method).c_str(), cell.coarse_n, cell.basis_dim, last.rel_L2, last.rel_H1,
                  cell.max_mass_deviation, cell.offline_seconds, cell.online_seconds);
    } else {
      std::printf("%-8s H=1/%-5d FAILED: %s\n", method_name(cell.method).c_str(), cell.coarse_n, cell.error.c_str());
    }
  }
  std::printf("outputs written to %s\n", dir.string().c_str());
  return result.all_ok() ? 0 : 2;
}

int cmd_basis(const std::string& path, const std::string& output, int workers) {
  const ExperimentConfig config = load_with_overrides(path, output, workers);
  const auto report = validate_config(config);
  print_validation(report);
  if (!report.ok()) return 1;
  const auto& c = report.config;
  const PotentialSpec spec = c.potential();
  const FineOperators ops = assemble_fine_operators(build_mesh(spec.dim, c.fine), spec);
  int failures = 0;
  for (Method m : c.methods) {
    if (m == Method::FEM) continue;
    for (int n : c.coarse) {
      try {
        const SpaceBuild space = build_method_space(ops, m, n, c, c.workers);
        const auto file = c.output / "bases" / (method_name(m) + "-H" + std::to_string(n) + ".msfem");
        save_space(file, space, c);
        std::printf("%-8s H=1/%-5d dim=%-6ld l*=%d -> %s\n", method_name(m).c_str(), n,
                    static_cast<long>(space.basis->cols()), space.l_star, file.string().c_str());
      } catch (const std::exception& e) {
        ++failures;
        std::printf("%-8s H=1/%-5d FAILED: %s\n", method_name(m).c_str(), n, e.what());
      }
    }
  }
  return failures == 0 ? 0 : 2;
}

int cmd_reference(const std::string& path, bool allow_full_scale) {
  const auto report = validate_config(load_config(path));
  print_validation(report);
  if (!report.ok()) return 1;
  if (report.config.full_scale && !allow_full_scale) {
    std::printf("error: config is marked full_scale; pass --allow-full-scale\n");
    return 1;
  }
  RunOptions options;
  options.cache_dir = default_cache_dir();
  const auto ref = compute_reference(report.config, options);
  std::printf("reference %s (%s), %zu states, mass deviation %.2e\n",
              ReferenceCache(*options.cache_dir).path_for(ref.params).string().c_str(),
              ref.from_cache ? "cached" : "computed", ref.trajectory.states.size(),
              ref.trajectory.max_mass_deviation);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale finite elements for the semiclassical Schroedinger equation"};
  app.require_subcommand(1);
  app.footer("Cache directory: $MSFEM_CACHE_DIR (default ./.msfem-cache)");

  std::string config_path, output;
  int workers = 0;
  bool allow_full_scale = false;

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV outputs");
  run->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Output directory (overrides the config)");
  run->add_option("-j,--workers", workers, "Worker threads");
  run->add_flag("--allow-full-scale", allow_full_scale, "Permit full-scale configs");

  auto* validate = app.add_subcommand("validate", "Check a config and print the normalized form");
  validate->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);

  auto* basis = app.add_subcommand("basis", "Build and serialize multiscale bases only");
  basis->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  basis->add_option("-o,--output", output, "Output directory (overrides the config)");
  basis->add_option("-j,--workers", workers, "Worker threads");

  auto* reference = app.add_subcommand("reference", "Compute or load the cached reference solution");
  reference->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  reference->add_flag("--allow-full-scale", allow_full_scale, "Permit full-scale configs");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, output, workers, allow_full_scale);
    if (*validate) return cmd_validate(config_path);
    if (*basis) return cmd_basis(config_path, output, workers);
    if (*reference) return cmd_reference(config_path, allow_full_scale);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
