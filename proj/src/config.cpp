#include "msfem/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "msfem/expression.hpp"

namespace msfem {

std::string method_name(Method m) {
  switch (m) {
    case Method::FEM: return "FEM";
    case Method::MsFEM: return "MsFEM";
    case Method::EnMsFEM: return "EnMsFEM";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "FEM") return Method::FEM;
  if (name == "MsFEM") return Method::MsFEM;
  if (name == "EnMsFEM") return Method::EnMsFEM;
  throw Error("unknown method '" + name + "' (expected FEM, MsFEM or EnMsFEM)");
}

std::string enrichment_mode_name(EnrichmentMode m) {
  switch (m) {
    case EnrichmentMode::none: return "none";
    case EnrichmentMode::one_step: return "one_step";
    case EnrichmentMode::greedy: return "greedy";
  }
  return "?";
}

EnrichmentMode parse_enrichment_mode(const std::string& name) {
  if (name == "none") return EnrichmentMode::none;
  if (name == "one_step") return EnrichmentMode::one_step;
  if (name == "greedy") return EnrichmentMode::greedy;
  throw Error("unknown enrichment mode '" + name + "' (expected none, one_step or greedy)");
}

double parse_number(const std::string& text) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  double value;
  try {
    value = Expression(text)({nan, nan, nan, nan, nan});
  } catch (const std::exception& e) {
    throw Error("bad number '" + text + "': " + e.what());
  }
  if (!std::isfinite(value)) throw Error("'" + text + "' is not a finite constant");
  return value;
}

namespace {

int parse_int(const std::string& text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw Error("'" + text + "' is not an integer");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error("'" + text + "' is not a boolean");
}

const std::string& single(const std::string& key, const std::vector<std::string>& inputs) {
  if (inputs.size() != 1) throw Error("key '" + key + "' expects a single value");
  return inputs.front();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw Error(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig c;
  std::vector<std::string> errors;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    const auto& in_values = item.inputs;
    try {
      auto one = [&] { return single(key, in_values); };
      if (key == "name") c.name = one();
      else if (key == "example") c.example = parse_int(one());
      else if (key == "dim") c.dim = parse_int(one());
      else if (key == "v1") c.v1 = one();
      else if (key == "v2_space") c.v2_space = one();
      else if (key == "v2_time") c.v2_time = one();
      else if (key == "period") c.period = parse_number(one());
      else if (key == "checkerboard_cos_plus_one") c.checkerboard_cos_plus_one = parse_bool(one());
      else if (key == "epsilon") c.epsilon = parse_number(one());
      else if (key == "E0") c.E0 = parse_number(one());
      else if (key == "coarse") {
        c.coarse.clear();
        for (const auto& v : in_values) c.coarse.push_back(parse_int(v));
      } else if (key == "fine") c.fine = parse_int(one());
      else if (key == "l_star") {
        const auto& v = one();
        if (v == "auto") c.l_star.reset();
        else if (v == "global") c.l_star = kGlobalLStar;
        else c.l_star = parse_int(v);
      } else if (key == "dt") c.dt = parse_number(one());
      else if (key == "T") c.T = parse_number(one());
      else if (key == "methods") {
        c.methods.clear();
        for (const auto& v : in_values) c.methods.push_back(parse_method(v));
      } else if (key == "sigma") c.sigma = parse_number(one());
      else if (key == "enrichment") c.enrichment = parse_enrichment_mode(one());
      else if (key == "keep_fraction") c.keep_fraction = parse_number(one());
      else if (key == "delta") {
        const auto& v = one();
        if (v == "auto") c.delta.reset();
        else c.delta = parse_number(v);
      } else if (key == "snapshots") c.snapshots = parse_int(one());
      else if (key == "drop_tol") c.drop_tol = parse_number(one());
      else if (key == "series_times") {
        c.series_times.clear();
        for (const auto& v : in_values) c.series_times.push_back(parse_number(v));
      } else if (key == "stride") c.stride = parse_int(one());
      else if (key == "reference") c.reference = parse_method(one());
      else if (key == "reference_fine") c.reference_fine = parse_int(one());
      else if (key == "reference_coarse") c.reference_coarse = parse_int(one());
      else if (key == "reference_dt") c.reference_dt = parse_number(one());
      else if (key == "output") c.output = one();
      else if (key == "workers") c.workers = parse_int(one());
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(one()));
      else if (key == "full_scale") c.full_scale = parse_bool(one());
      else errors.push_back("unknown key '" + key + "'");
    } catch (const Error& e) {
      errors.push_back(key + ": " + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(msg);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

PotentialSpec ExperimentConfig::potential() const {
  if (example == 0) return custom_potential(dim, epsilon, E0, v1, v2_space, v2_time, period);
  return catalog(example, epsilon, E0, CatalogOptions{checkerboard_cos_plus_one});
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["example"] = example;
  if (example == 0) {
    j["dim"] = dim;
    j["v1"] = v1;
    j["v2_space"] = v2_space;
    j["v2_time"] = v2_time;
    j["period"] = period;
  }
  j["checkerboard_cos_plus_one"] = checkerboard_cos_plus_one;
  j["epsilon"] = epsilon;
  j["E0"] = E0;
  j["coarse"] = coarse;
  j["fine"] = fine;
  j["l_star"] = l_star ? nlohmann::json(*l_star) : nlohmann::json("auto");
  j["dt"] = dt;
  j["T"] = T;
  std::vector<std::string> names;
  for (auto m : methods) names.push_back(method_name(m));
  j["methods"] = names;
  j["sigma"] = sigma;
  j["enrichment"] = enrichment_mode_name(enrichment);
  j["keep_fraction"] = keep_fraction;
  j["delta"] = delta ? nlohmann::json(*delta) : nlohmann::json("auto");
  j["snapshots"] = snapshots;
  j["drop_tol"] = drop_tol;
  j["series_times"] = series_times;
  j["stride"] = stride;
  j["reference"] = method_name(reference);
  j["reference_fine"] = reference_fine;
  j["reference_coarse"] = reference_coarse;
  j["reference_dt"] = reference_dt;
  j["output"] = output.string();
  j["workers"] = workers;
  j["seed"] = seed;
  j["full_scale"] = full_scale;
  return j;
}

namespace {

bool on_grid(double t, double dt) {
  const double r = t / dt;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

}  // namespace

ValidationReport validate_config(const ExperimentConfig& config) {
  ValidationReport report;
  report.config = config;
  auto& c = report.config;
  auto& err = report.errors;

  std::optional<PotentialSpec> spec;
  if (c.example < 0 || c.example > 4) err.push_back("example must be 0 (custom) or 1..4");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) err.push_back("epsilon must lie in (0, 1)");
  if (err.empty()) {
    try {
      spec = c.potential();
      c.dim = spec->dim;
    } catch (const std::exception& e) {
      err.push_back(std::string("potential: ") + e.what());
    }
  }
  if (c.methods.empty()) err.push_back("methods must not be empty");
  if (c.coarse.empty()) err.push_back("coarse mesh list must not be empty");
  if (c.fine < 2) err.push_back("fine mesh must have at least 2 cells per side");
  if (!(c.dt > 0.0)) err.push_back("dt must be positive");
  if (!(c.T > 0.0)) err.push_back("T must be positive");
  if (c.dt > 0.0 && c.T > 0.0 && !on_grid(c.T, c.dt)) err.push_back("dt does not divide T");
  if (!(c.keep_fraction > 0.0 && c.keep_fraction <= 1.0)) err.push_back("keep_fraction must lie in (0, 1]");
  if (c.delta && !(*c.delta > 0.0)) err.push_back("delta must be positive");
  if (c.snapshots < 2) err.push_back("snapshots must be at least 2");
  if (c.stride < 1) err.push_back("stride must be positive");
  if (!(c.sigma > 0.0)) err.push_back("sigma must be positive");
  if (c.reference != Method::FEM && c.reference != Method::EnMsFEM) err.push_back("reference must be FEM or EnMsFEM");

  if (c.reference_dt == 0.0) c.reference_dt = c.dt;
  if (c.reference_fine == 0) c.reference_fine = c.fine;
  if (!(c.reference_dt > 0.0)) err.push_back("reference_dt must be positive");
  if (c.reference_dt > 0.0 && !on_grid(c.T, c.reference_dt)) err.push_back("reference_dt does not divide T");
  for (double t : c.series_times) {
    if (!(t > 0.0 && t <= c.T)) err.push_back("series time " + std::to_string(t) + " outside (0, T]");
    else if ((c.dt > 0.0 && !on_grid(t, c.dt)) || (c.reference_dt > 0.0 && !on_grid(t, c.reference_dt))) {
      err.push_back("series time " + std::to_string(t) + " is not on the time-step grid");
    }
  }

  const bool has_fem = std::find(c.methods.begin(), c.methods.end(), Method::FEM) != c.methods.end();
  if (c.reference == Method::FEM) {
    if (c.fine >= 2 && c.reference_fine % c.fine != 0) {
      err.push_back("reference_fine " + std::to_string(c.reference_fine) + " is not a refinement of fine " +
                    std::to_string(c.fine));
    }
  } else {
    if (c.reference_coarse < 2) err.push_back("EnMsFEM reference needs reference_coarse");
    else if (c.reference_fine % c.reference_coarse != 0) err.push_back("reference_coarse does not nest in reference_fine");
    if (c.fine >= 2 && c.reference_fine % c.fine != 0) err.push_back("reference_fine is not a refinement of fine");
  }

  if (spec) {
    report.V0 = potential_bound(*spec, c.dim == 1 ? 4096 : 128);
  }
  for (int n : c.coarse) {
    if (n < 2) {
      err.push_back("coarse mesh " + std::to_string(n) + " needs at least 2 cells");
      continue;
    }
    if (c.fine >= 2 && c.fine % n != 0) {
      err.push_back("coarse mesh 1/" + std::to_string(n) + " does not nest in fine mesh 1/" + std::to_string(c.fine));
    }
    if (has_fem && c.reference_fine % n != 0) {
      err.push_back("coarse mesh 1/" + std::to_string(n) + " does not nest in the reference mesh");
    }
    MeshReport m;
    m.coarse = n;
    m.H = 1.0 / n;
    m.l_star = c.l_star ? *c.l_star : static_cast<int>(std::ceil(std::log2(static_cast<double>(n)) - 1e-12));
    m.resolution_ratio = std::sqrt(report.V0) * m.H / c.epsilon;
    if (m.resolution_ratio > 1.0) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "H=1/%d: sqrt(V0) H / eps = %.3g exceeds 1 (coarse mesh under-resolves the potential)",
                    n, m.resolution_ratio);
      report.warnings.emplace_back(buf);
    }
    report.meshes.push_back(m);
  }
  return report;
}

}  // namespace msfem
