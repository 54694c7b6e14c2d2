#pragma once

#include <string>
#include <vector>

#include "msfem/types.hpp"

namespace msfem {

/// One separable drive term v2_n(x) s_n(t).
struct DriveTerm {
  ScalarField space;
  TimeFactor time;
};

/// v(x, t) = v1(x) + sum_n v2_n(x) s_n(t) on the periodic unit domain.
struct PotentialSpec {
  int example_id = 0;  // 0 for custom potentials
  int dim = 1;
  double epsilon = 1.0 / 32;
  double E0 = 0.0;
  ScalarField v1;
  std::vector<DriveTerm> terms;
  double period = 1.0;     // period of the drive in t
  std::string descriptor;  // canonical identity, used in cache keys and manifests

  double static_part(const Point& x) const { return v1(x); }
  double drive(const Point& x, double t) const;
  double operator()(const Point& x, double t) const { return v1(x) + drive(x, t); }
  bool time_dependent() const { return !terms.empty(); }
};

struct CatalogOptions {
  /// Reads the first checkerboard branch of example 4 as (sin+1)(cos+1)
  /// instead of the printed (sin+1)cos.
  bool checkerboard_cos_plus_one = false;
};

/// Potentials of the four benchmark problems:
///   1: cos(2 pi x/eps),                     E0 sin(2 pi t) x
///   2: sin(2x^2) sin(2 pi x/eps),           E0 x (e^{2 sin 2 pi t} - 1)/(e^2 - 1)
///   3: layered two-scale (eps, 4 eps/3),    E0 x * triangular wave of period 1/2
///   4: 2D checkerboard (eps, 4 eps/3),      E0 sin(2 pi t)(x + y)
PotentialSpec catalog(int example_id, double epsilon, double E0, const CatalogOptions& options = {});

/// Single-term potential from expressions in x, y, t, eps, E0.
PotentialSpec custom_potential(int dim, double epsilon, double E0, const std::string& v1,
                               const std::string& v2_space, const std::string& v2_time,
                               double period);

/// Uniform sampling grid with grid_n points per side, both endpoints included.
std::vector<Point> sampling_grid(int dim, int grid_n);

int default_sup_grid(int dim);

/// max |v2(., t)| over the sampling grid.
double v2_sup_norm(const PotentialSpec& spec, double t, int grid_n);

/// max |v2(., t1) - v2(., t2)| over the sampling grid.
double v2_distance(const PotentialSpec& spec, double t1, double t2, int grid_n);

/// Bound V0 on |v1 + v2| over the grid and `time_samples` instants of one period.
double potential_bound(const PotentialSpec& spec, int grid_n, int time_samples = 64);

}  // namespace msfem
