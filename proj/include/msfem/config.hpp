#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msfem/enrichment.hpp"

namespace msfem {

enum class Method { FEM, MsFEM, EnMsFEM };
enum class EnrichmentMode { none, one_step, greedy };

std::string method_name(Method m);
Method parse_method(const std::string& name);
std::string enrichment_mode_name(EnrichmentMode m);
EnrichmentMode parse_enrichment_mode(const std::string& name);

/// Constant numeric literal with arithmetic, e.g. "1/32" or "2^-12".
double parse_number(const std::string& text);

struct ExperimentConfig {
  std::string name = "experiment";
  int example = 1;  // 0 selects the custom potential below
  int dim = 1;
  std::string v1, v2_space, v2_time;
  double period = 1.0;
  bool checkerboard_cos_plus_one = false;

  double epsilon = 1.0 / 32;
  double E0 = 20.0;
  std::vector<int> coarse;  // cells per side
  int fine = 0;
  std::optional<int> l_star;  // unset: ceil(log2(1/H)) per mesh; -1: global basis
  double dt = 0.0;
  double T = 1.0;
  std::vector<Method> methods;
  double sigma = 0.2;

  EnrichmentMode enrichment = EnrichmentMode::one_step;
  double keep_fraction = 0.125;
  std::optional<double> delta;  // unset: 0.1 max |v2|
  int snapshots = 64;           // instances per drive period
  double drop_tol = 1e-8;

  std::vector<double> series_times;
  int stride = 64;

  Method reference = Method::FEM;  // FEM or EnMsFEM
  int reference_fine = 0;
  int reference_coarse = 0;  // EnMsFEM reference only
  double reference_dt = 0.0;

  std::filesystem::path output = "out";
  int workers = 0;
  std::uint64_t seed = 0;  // reserved; every algorithm here is deterministic
  bool full_scale = false;

  PotentialSpec potential() const;
  nlohmann::json to_json() const;
};

/// Parses a key = value file ('#' comments, [a, b] lists, quoted strings).
/// Unknown keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

struct MeshReport {
  int coarse = 0;
  double H = 0.0;
  int l_star = 0;
  double resolution_ratio = 0.0;  // sqrt(V0) H / eps
};

struct ValidationReport {
  ExperimentConfig config;  // with defaults filled in
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::vector<MeshReport> meshes;
  double V0 = 0.0;

  bool ok() const { return errors.empty(); }
};

ValidationReport validate_config(const ExperimentConfig& config);

}  // namespace msfem
