#include "msfem/potential.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "msfem/expression.hpp"

namespace msfem {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string describe(int id, double eps, double E0, const std::string& extra = {}) {
  std::ostringstream os;
  os.precision(17);
  os << "example=" << id << ";eps=" << eps << ";E0=" << E0 << extra;
  return os.str();
}

}  // namespace

double PotentialSpec::drive(const Point& x, double t) const {
  double v = 0.0;
  for (const auto& term : terms) v += term.space(x) * term.time(t);
  return v;
}

PotentialSpec catalog(int example_id, double epsilon, double E0, const CatalogOptions& options) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("catalog: epsilon must be positive");
  PotentialSpec spec;
  spec.example_id = example_id;
  spec.epsilon = epsilon;
  spec.E0 = E0;
  const double eps = epsilon;
  const double eps2 = 4.0 * epsilon / 3.0;
  switch (example_id) {
    case 1:
      spec.v1 = [eps](const Point& p) { return std::cos(kTwoPi * p[0] / eps); };
      spec.terms.push_back({[E0](const Point& p) { return E0 * p[0]; },
                            [](double t) { return std::sin(kTwoPi * t); }});
      break;
    case 2:
      spec.v1 = [eps](const Point& p) {
        return std::sin(2.0 * p[0] * p[0]) * std::sin(kTwoPi * p[0] / eps);
      };
      spec.terms.push_back({[E0](const Point& p) { return E0 * p[0]; },
                            [](double t) {
                              return std::expm1(2.0 * std::sin(kTwoPi * t)) / std::expm1(2.0);
                            }});
      break;
    case 3:
      spec.v1 = [eps, eps2](const Point& p) {
        const double x = p[0];
        const double base = 2.0 * (x - 0.5) * (x - 0.5) - 0.5;
        if (x <= 0.5) return base + 0.5 * std::cos(kTwoPi * x / eps);
        return base + 0.5 * std::cos(kTwoPi * x / eps2) + 0.5;
      };
      spec.terms.push_back({[E0](const Point& p) { return E0 * p[0]; },
                            [](double t) {
                              const double s = t - 0.5 * std::floor(t / 0.5);
                              return s <= 0.25 ? 4.0 * s : 2.0 - 4.0 * s;
                            }});
      spec.period = 0.5;
      break;
    case 4: {
      spec.dim = 2;
      const double shift = options.checkerboard_cos_plus_one ? 1.0 : 0.0;
      spec.v1 = [eps, eps2, shift](const Point& p) {
        const double x = p[0], y = p[1];
        const bool diagonal_block = (x <= 0.5 && y <= 0.5) || (x >= 0.5 && y >= 0.5);
        if (diagonal_block) {
          return (std::sin(kTwoPi * x / eps2) + 1.0) * (std::cos(kTwoPi * y / eps2) + shift);
        }
        return std::sin(kTwoPi * x / eps) * (std::cos(kTwoPi * y / eps) + 1.0);
      };
      spec.terms.push_back({[E0](const Point& p) { return E0 * (p[0] + p[1]); },
                            [](double t) { return std::sin(kTwoPi * t); }});
      break;
    }
    default:
      throw std::invalid_argument("catalog: unknown example id " + std::to_string(example_id));
  }
  spec.descriptor = describe(example_id, epsilon, E0,
                             options.checkerboard_cos_plus_one && example_id == 4 ? ";cos_plus_one=1" : "");
  return spec;
}

PotentialSpec custom_potential(int dim, double epsilon, double E0, const std::string& v1,
                               const std::string& v2_space, const std::string& v2_time,
                               double period) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("custom_potential: dim must be 1 or 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("custom_potential: epsilon must be positive");
  if (!(period > 0.0)) throw std::invalid_argument("custom_potential: period must be positive");
  PotentialSpec spec;
  spec.example_id = 0;
  spec.dim = dim;
  spec.epsilon = epsilon;
  spec.E0 = E0;
  spec.period = period;
  const Expression static_expr(v1);
  spec.v1 = [static_expr, epsilon, E0](const Point& p) {
    return static_expr({.x = p[0], .y = p[1], .t = 0.0, .eps = epsilon, .E0 = E0});
  };
  if (!v2_space.empty()) {
    const Expression space_expr(v2_space);
    const Expression time_expr(v2_time.empty() ? "1" : v2_time);
    spec.terms.push_back(
        {[space_expr, epsilon, E0](const Point& p) {
           return space_expr({.x = p[0], .y = p[1], .t = 0.0, .eps = epsilon, .E0 = E0});
         },
         [time_expr, epsilon, E0](double t) {
           return time_expr({.x = 0.0, .y = 0.0, .t = t, .eps = epsilon, .E0 = E0});
         }});
  }
  spec.descriptor = describe(0, epsilon, E0,
                             ";dim=" + std::to_string(dim) + ";v1=" + v1 + ";v2_space=" + v2_space +
                                 ";v2_time=" + v2_time);
  return spec;
}

std::vector<Point> sampling_grid(int dim, int grid_n) {
  if (grid_n < 2) throw std::invalid_argument("sampling grid needs at least 2 points per side");
  std::vector<Point> grid;
  const double step = 1.0 / (grid_n - 1);
  if (dim == 1) {
    for (int i = 0; i < grid_n; ++i) grid.push_back({i * step, 0.0});
  } else {
    for (int j = 0; j < grid_n; ++j) {
      for (int i = 0; i < grid_n; ++i) grid.push_back({i * step, j * step});
    }
  }
  return grid;
}

int default_sup_grid(int dim) { return dim == 1 ? 4096 : 512; }

double v2_sup_norm(const PotentialSpec& spec, double t, int grid_n) {
  double sup = 0.0;
  for (const auto& p : sampling_grid(spec.dim, grid_n)) sup = std::max(sup, std::abs(spec.drive(p, t)));
  return sup;
}

double v2_distance(const PotentialSpec& spec, double t1, double t2, int grid_n) {
  double sup = 0.0;
  for (const auto& p : sampling_grid(spec.dim, grid_n)) {
    sup = std::max(sup, std::abs(spec.drive(p, t1) - spec.drive(p, t2)));
  }
  return sup;
}

double potential_bound(const PotentialSpec& spec, int grid_n, int time_samples) {
  const auto grid = sampling_grid(spec.dim, grid_n);
  std::vector<double> static_values;
  static_values.reserve(grid.size());
  for (const auto& p : grid) static_values.push_back(spec.v1(p));
  double bound = 0.0;
  const int samples = spec.time_dependent() ? time_samples : 1;
  for (int k = 0; k < samples; ++k) {
    const double t = spec.period * k / samples;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      bound = std::max(bound, std::abs(static_values[i] + spec.drive(grid[i], t)));
    }
  }
  return bound;
}

}  // namespace msfem
