#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "msfem/expression.hpp"
#include "msfem/potential.hpp"

using namespace msfem;

namespace {

constexpr double kPi = std::numbers::pi;

// Formulas transcribed directly, independent of the separable representation.
double direct(int id, double x, double y, double t, double eps, double E0) {
  switch (id) {
    case 1:
      return std::cos(2 * kPi * x / eps) + E0 * std::sin(2 * kPi * t) * x;
    case 2:
      return std::sin(2 * x * x) * std::sin(2 * kPi * x / eps) +
             E0 * x * (std::exp(2 * std::sin(2 * kPi * t)) - 1) / (std::exp(2.0) - 1);
    case 3: {
      const double e2 = 4 * eps / 3;
      double v1 = 2 * (x - 0.5) * (x - 0.5) - 0.5;
      v1 += x <= 0.5 ? 0.5 * std::cos(2 * kPi * x / eps) : 0.5 * std::cos(2 * kPi * x / e2) + 0.5;
      double tau = std::fmod(t, 0.5);
      if (tau < 0) tau += 0.5;
      const double wave = tau <= 0.25 ? 4 * tau : 2 - 4 * tau;
      return v1 + E0 * x * wave;
    }
    case 4: {
      const double e2 = 4 * eps / 3;
      const bool block = (x <= 0.5 && y <= 0.5) || (x >= 0.5 && y >= 0.5);
      const double v1 = block ? (std::sin(2 * kPi * x / e2) + 1) * std::cos(2 * kPi * y / e2)
                              : std::sin(2 * kPi * x / eps) * (std::cos(2 * kPi * y / eps) + 1);
      return v1 + E0 * std::sin(2 * kPi * t) * (x + y);
    }
  }
  return NAN;
}

}  // namespace

TEST_CASE("catalog examples") {
  const PotentialSpec ex1 = catalog(1, 1.0 / 32, 20);
  for (double t : {0.0, 0.1, 0.25, 0.77}) CHECK(ex1({0.0, 0.0}, t) == doctest::Approx(1.0).epsilon(1e-15));
  for (double x : {0.1, 0.5, 0.9}) CHECK(ex1.drive({x, 0.0}, 0.25) == doctest::Approx(20 * x).epsilon(1e-14));

  // (0.25, 0.75) lies in an off-diagonal quadrant.
  const PotentialSpec ex4 = catalog(4, 1.0 / 8, 20);
  const double expected = std::sin(2 * kPi * 0.25 * 8) * (std::cos(2 * kPi * 0.75 * 8) + 1);
  CHECK(ex4.v1({0.25, 0.75}) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(ex4.dim == 2);

  CHECK_THROWS_AS(catalog(5, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(catalog(1, 0.0, 1), std::invalid_argument);
}

TEST_CASE("separable evaluation matches the direct formulas") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int id = 1; id <= 4; ++id) {
    const double eps = id == 4 ? 1.0 / 8 : 1.0 / 32;
    const PotentialSpec spec = catalog(id, eps, 20);
    for (int k = 0; k < 100; ++k) {
      const double x = unit(rng), y = id == 4 ? unit(rng) : 0.0, t = 2 * unit(rng);
      CHECK(std::abs(spec({x, y}, t) - direct(id, x, y, t, eps, 20)) <= 1e-14 * std::max(1.0, std::abs(direct(id, x, y, t, eps, 20))));
    }
  }
}

TEST_CASE("checkerboard toggle adds one to the first-branch cosine") {
  CatalogOptions options;
  options.checkerboard_cos_plus_one = true;
  const PotentialSpec a = catalog(4, 1.0 / 8, 20);
  const PotentialSpec b = catalog(4, 1.0 / 8, 20, options);
  const Point p{0.3, 0.2};
  CHECK(b.v1(p) - a.v1(p) == doctest::Approx(std::sin(2 * kPi * 0.3 * 6) + 1).epsilon(1e-13));
  const Point off{0.3, 0.8};
  CHECK(a.v1(off) == b.v1(off));
  CHECK(a.descriptor != b.descriptor);
}

TEST_CASE("drive periodicity") {
  for (int id : {1, 2, 4}) {
    const PotentialSpec spec = catalog(id, id == 4 ? 0.125 : 1.0 / 32, 20);
    CHECK(spec.period == 1.0);
    for (double t : {0.0, 0.13, 0.5, 0.91}) {
      for (double x : {0.2, 0.7}) {
        CHECK(spec.drive({x, 0.4}, t + 1.0) == doctest::Approx(spec.drive({x, 0.4}, t)).epsilon(1e-12));
      }
    }
  }
  const PotentialSpec ex3 = catalog(3, 1.0 / 32, 20);
  CHECK(ex3.period == 0.5);
  for (double t : {0.0, 0.1, 0.25, 0.4}) CHECK(ex3.drive({0.6, 0}, t + 0.5) == doctest::Approx(ex3.drive({0.6, 0}, t)));
  CHECK(ex3.drive({1.0, 0}, 0.25) == doctest::Approx(20.0));
  CHECK(ex3.drive({1.0, 0}, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("sup norms on the sampling grid") {
  const PotentialSpec ex1 = catalog(1, 1.0 / 32, 20);
  for (int n : {2, 17, 4096}) CHECK(v2_sup_norm(ex1, 0.25, n) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(v2_sup_norm(ex1, 0.5, 4096) <= 20 * std::abs(std::sin(kPi)) + 1e-15);

  const PotentialSpec ex2 = catalog(2, 1.0 / 32, 20);
  const double closed = 20 * std::abs(std::exp(-2.0) - 1) / (std::exp(2.0) - 1);
  CHECK(v2_sup_norm(ex2, 0.75, 4096) == doctest::Approx(closed).epsilon(1e-13));

  CHECK(v2_distance(ex1, 0.25, 0.75, 33) == doctest::Approx(40.0));
  CHECK(v2_distance(ex1, 0.3, 0.3, 33) == 0.0);
  CHECK_THROWS(v2_sup_norm(ex1, 0.0, 1));

  const auto grid = sampling_grid(2, 3);
  REQUIRE(grid.size() == 9);
  CHECK(grid.back()[0] == 1.0);
  CHECK(grid.back()[1] == 1.0);
}

TEST_CASE("potential bound over one period") {
  const PotentialSpec ex1 = catalog(1, 1.0 / 32, 20);
  const double V0 = potential_bound(ex1, 10000, 64);
  CHECK(std::isfinite(V0));
  CHECK(V0 <= 21.0 + 1e-12);
  CHECK(V0 >= 20.0);
}

TEST_CASE("custom potentials and expressions") {
  const PotentialSpec spec = custom_potential(1, 0.5, 3, "cos(2*pi*x/eps)", "E0*x", "sin(2*pi*t)", 1.0);
  CHECK(spec({0.25, 0}, 0.25) == doctest::Approx(std::cos(kPi) + 0.75).epsilon(1e-14));
  CHECK(spec.time_dependent());
  CHECK_FALSE(custom_potential(2, 0.5, 0, "x*y", "", "", 1.0).time_dependent());

  const Expression e("-2^2 + 3*(1 - x)/y + abs(-t) + floor(2.5)");
  CHECK(e({.x = 0.5, .y = 3.0, .t = -1.5}) == doctest::Approx(-4 + 0.5 + 1.5 + 2));
  CHECK(Expression("2^3^2")({}) == doctest::Approx(512.0));
  CHECK(Expression("exp(log(7)) + sqrt(16) + tan(0)")({}) == doctest::Approx(11.0));
  CHECK_THROWS(Expression("sin(x"));
  CHECK_THROWS(Expression("x +"));
  CHECK_THROWS(Expression("unknown(1)"));
  CHECK_THROWS(Expression("z"));
}
