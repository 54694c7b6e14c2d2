#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <fstream>

#include "msfem/container.hpp"
#include "msfem/fem_assembly.hpp"
#include "msfem/observables.hpp"
#include "msfem/reference_solver.hpp"

using namespace msfem;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("msfem-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void flip_byte(const fs::path& file, std::size_t offset_from_end) {
  std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(f.tellg());
  const auto pos = static_cast<std::streamoff>(size - offset_from_end);
  f.seekg(pos);
  char c = 0;
  f.read(&c, 1);
  c = static_cast<char>(c ^ 0x5a);
  f.seekp(pos);
  f.write(&c, 1);
}

}  // namespace

TEST_CASE("archive round trip and corruption") {
  Archive a;
  a.header["name"] = "demo";
  a.f64["x"] = {1.0, -2.5, 1e-300};
  a.c128["z"] = {{1.0, 2.0}, {-0.0, 3.5}};
  a.i64["k"] = {-7, 1LL << 40};
  const auto bytes = encode_archive(a);
  const Archive b = decode_archive(bytes);
  CHECK(b.header["name"] == "demo");
  CHECK(b.f64 == a.f64);
  CHECK(b.c128 == a.c128);
  CHECK(b.i64 == a.i64);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "MSFEMBIN");

  for (std::size_t at : {std::size_t{3}, std::size_t{20}, bytes.size() - 9}) {
    auto broken = bytes;
    broken[at] = static_cast<char>(broken[at] ^ 1);
    CHECK_THROWS_AS(decode_archive(broken), CorruptArchive);
  }
  CHECK_THROWS_AS(decode_archive(std::vector<char>(bytes.begin(), bytes.end() - 5)), CorruptArchive);
  CHECK_THROWS_AS(decode_archive({}), CorruptArchive);

  const fs::path dir = scratch("archive");
  BasisMatrix B(5, 3);
  B.insert(0, 0) = 1.5;
  B.insert(4, 2) = -2.0;
  B.makeCompressed();
  Eigen::VectorXcd v(2);
  v << Complex(1, 2), Complex(3, -4);
  Archive c;
  put_sparse(c, "B", B);
  put_vector(c, "v", v);
  write_archive(dir / "c.msfem", c);
  const Archive d = read_archive(dir / "c.msfem");
  CHECK(Eigen::MatrixXd(get_sparse(d, "B") - B).cwiseAbs().maxCoeff() == 0.0);
  CHECK(get_vector(d, "v") == v);
  CHECK_THROWS(get_vector(d, "missing"));
  CHECK_THROWS_AS(read_archive(dir / "absent.msfem"), Error);
  fs::remove_all(dir);
}

TEST_CASE("time grid helpers") {
  CHECK(grid_steps({0.25, 1.0}, 0.0, 1.0 / 64) == std::vector<int>{16, 64});
  CHECK_THROWS_AS(grid_steps({0.3}, 0.0, 0.25), std::invalid_argument);
  CHECK(normalized_times({0.5, 0.25, 0.5}, 1.0) == std::vector<double>{0.25, 0.5, 1.0});

  Trajectory t;
  t.times = {0.5};
  t.states = {Eigen::VectorXcd::Ones(2)};
  CHECK(t.at(0.5).size() == 2);
  CHECK_THROWS(t.at(0.75));
}

TEST_CASE("cache directory from the environment") {
  ::setenv("MSFEM_CACHE_DIR", "/tmp/somewhere", 1);
  CHECK(default_cache_dir() == fs::path("/tmp/somewhere"));
  ::unsetenv("MSFEM_CACHE_DIR");
  CHECK(default_cache_dir() == fs::path(".msfem-cache"));
}

TEST_CASE("reference cache round trip and recovery") {
  const fs::path dir = scratch("cache");
  const PotentialSpec spec = catalog(1, 1.0 / 8, 20);
  ReferenceOptions options;
  options.cache_dir = dir;
  const std::vector<double> times{0.25, 0.5};

  const ReferenceResult first = solve_reference(spec, 128, 1.0 / 256, 0.5, times, options);
  CHECK_FALSE(first.from_cache);
  CHECK(first.trajectory.times == times);
  CHECK(first.trajectory.max_mass_deviation <= 1e-12);

  const ReferenceResult second = solve_reference(spec, 128, 1.0 / 256, 0.5, times, options);
  CHECK(second.from_cache);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(second.trajectory.states[i] == first.trajectory.states[i]);
  CHECK(second.trajectory.max_mass_deviation == first.trajectory.max_mass_deviation);

  // Different parameters miss.
  const ReferenceResult other = solve_reference(spec, 128, 1.0 / 128, 0.5, times, options);
  CHECK_FALSE(other.from_cache);

  // A damaged entry is recomputed and rewritten.
  const fs::path file = ReferenceCache(dir).path_for(first.params);
  REQUIRE(fs::exists(file));
  flip_byte(file, 100);
  const ReferenceResult third = solve_reference(spec, 128, 1.0 / 256, 0.5, times, options);
  CHECK_FALSE(third.from_cache);
  CHECK(third.trajectory.states[1] == first.trajectory.states[1]);
  CHECK(solve_reference(spec, 128, 1.0 / 256, 0.5, times, options).from_cache);

  nlohmann::json wrong = first.params;
  wrong["fine_n"] = 64;
  CHECK_FALSE(ReferenceCache(dir).load(wrong).has_value());
  fs::remove_all(dir);
}

TEST_CASE("coarse standard FEM at the fine resolution is the reference") {
  const PotentialSpec spec = catalog(2, 1.0 / 8, 20);
  const auto times = std::vector<double>{0.125, 0.25};
  const ReferenceResult ref = solve_reference(spec, 64, 1.0 / 128, 0.25, times);
  const Trajectory fem = solve_standard_fem_coarse(spec, 64, 1.0 / 128, 0.25, times);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(fem.states[i] == ref.trajectory.states[i]);
}

TEST_CASE("temporal self-convergence of the reference") {
  const PotentialSpec spec = catalog(1, 1.0 / 8, 20);
  const Mesh mesh = build_mesh(1, 256);
  const SparseMatrix S = assemble_stiffness(mesh), M = assemble_mass(mesh);
  const Eigen::VectorXcd finest = solve_reference(spec, 256, 1.0 / 4096, 0.5, {}).trajectory.at(0.5);
  double previous = 0.0;
  for (double dt : {1.0 / 128, 1.0 / 256, 1.0 / 512}) {
    const double e = relative_errors(solve_reference(spec, 256, dt, 0.5, {}).trajectory.at(0.5), finest, S, M).rel_L2;
    if (previous > 0.0) CHECK(previous / e == doctest::Approx(4.0).epsilon(0.2));
    previous = e;
  }

  ReferenceOptions options;
  options.self_convergence = true;
  const ReferenceResult r = solve_reference(spec, 64, 1.0 / 128, 0.25, {}, options);
  REQUIRE(r.self_convergence.has_value());
  CHECK(*r.self_convergence > 0.0);
  CHECK(*r.self_convergence < 1.0);
}
