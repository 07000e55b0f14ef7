#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "specobs/errors.hpp"
#include "specobs/mesher.hpp"
#include "specobs/variation.hpp"

using namespace specobs;
using namespace specobs::geometry;
using namespace specobs::variation;

namespace {

const ConvexDomain kDisk = ConvexDomain::disk({0, 0}, 1);

Spectrum solve_at(Point c, double r, double h, int N) {
  return fem::assemble_and_solve(mesh::mesh_domain(ObstacleDomain::make(kDisk, c, r), h), N);
}

SweepResult synthetic_sweep(const std::vector<double>& z) {
  SweepResult s;
  s.t_grid = {1.0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    SweepPoint p;
    p.center = {0.1 * static_cast<double>(i), 0};
    p.Z = {z[i]};
    p.Z_err = {0.0};
    p.lambda1 = -z[i];
    s.positions.push_back(p.center);
    s.points.push_back(p);
  }
  return s;
}

}  // namespace

TEST_CASE("Hadamard integrand vanishes for a concentric obstacle") {
  const auto s = solve_at({0, 0}, 0.3, 0.04, 60);
  const double ref = std::abs(hadamard_derivative(solve_at({0.3, 0}, 0.3, 0.04, 60), 0.5, {1, 0}));
  for (Point V : {Point{1, 0}, Point{0, 1}, direction(0.7)}) {
    for (double t : {0.2, 0.5, 1.0}) CHECK(std::abs(hadamard_derivative(s, t, V)) < 0.02 * ref);
  }
}

TEST_CASE("Hadamard derivative is positive away from the centre") {
  const auto s = solve_at({0.3, 0}, 0.3, 0.04, 60);
  for (double t : {0.2, 0.5, 1.0, 3.0}) CHECK(hadamard_derivative(s, t, {1, 0}) > 0.0);
  // Large-t sign agrees with the sign of -d lambda_1.
  CHECK(eigenvalue_derivative(s, 1, {1, 0}) < 0.0);
  CHECK_THROWS_AS(hadamard_derivative(s, 1e-3, {1, 0}), InvalidInput);  // unresolved tail
  CHECK_THROWS_AS(hadamard_derivative(Spectrum::synthetic({1, 2}), 1.0, {1, 0}), InvalidInput);
}

TEST_CASE("classical eigenvalue derivative matches a deformation difference") {
  const auto m = mesh::mesh_domain(ObstacleDomain::make(kDisk, {0.2, 0.1}, 0.3), 0.03);
  const auto s = fem::assemble_and_solve(m, 2);
  const double eps = 1e-3;
  for (Point V : {Point{1, 0}, Point{0, 1}}) {
    fem::SolverOptions plain;
    plain.boundary_data = false;
    const double up = fem::assemble_and_solve(mesh::translate_obstacle(m, V, eps), 2, plain).eigenvalues[0];
    const double down = fem::assemble_and_solve(mesh::translate_obstacle(m, V, -eps), 2, plain).eigenvalues[0];
    const double fd = (up - down) / (2 * eps);
    CHECK(std::abs(eigenvalue_derivative(s, 1, V) - fd) < 0.05 * std::abs(fd));
  }
}

TEST_CASE("monotonicity verification on synthetic data") {
  const auto up = verify_monotone(synthetic_sweep({1, 2, 4}), Quantity::Z, Direction::Nondecreasing);
  CHECK(up.pass);
  CHECK(up.certified);
  CHECK(up.margin == doctest::Approx(1.0));
  REQUIRE(up.steps.size() == 2);

  const auto flat = verify_monotone(synthetic_sweep({3, 3, 3}), Quantity::Z, Direction::Nondecreasing, 0.5);
  CHECK(flat.pass);
  CHECK(flat.margin == 0.0);
  CHECK_FALSE(flat.certified);

  const auto dip = synthetic_sweep({1, 2, 1.9});
  CHECK_FALSE(verify_monotone(dip, Quantity::Z, Direction::Nondecreasing).pass);
  CHECK(verify_monotone(dip, Quantity::Z, Direction::Nondecreasing, 0.2).pass);
  CHECK(verify_monotone(dip, Quantity::Z, Direction::Nondecreasing).margin == doctest::Approx(-0.1));

  CHECK(verify_monotone(synthetic_sweep({1, 2, 4}), Quantity::Lambda1, Direction::Nonincreasing).pass);
  CHECK_THROWS_AS(verify_monotone(synthetic_sweep({1, 2}), Quantity::Z, Direction::Nondecreasing, 0.0, 3),
                  InvalidInput);
}

TEST_CASE("boundary limit extrapolation") {
  const auto c = boundary_limit_extrapolation({0.4, 0.3, 0.2, 0.1}, {5, 5, 5, 5});
  CHECK(c.limit == doctest::Approx(5.0));
  CHECK(c.residual < 1e-12);
  CHECK(c.monotone_tail);

  std::vector<double> m{0.5, 0.4, 0.3, 0.2, 0.1}, v;
  for (double x : m) v.push_back(2.0 - 3.0 * x + 0.5 * x * x);
  const auto q = boundary_limit_extrapolation(m, v);
  CHECK(q.degree == 2);
  CHECK(q.limit == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(q.limit > v.back());
  CHECK(q.monotone_tail);

  CHECK_FALSE(boundary_limit_extrapolation(m, {1, 2, 3, 2.5, 4}).monotone_tail);
  CHECK_THROWS_AS(boundary_limit_extrapolation({0.3, 0.2, 0.1}, {1, 2, 3}), InvalidInput);
}

TEST_CASE("sweep rejects centres that leave no meshing margin") {
  const auto provider = mesh_provider(0.06, 1.0, 5);
  try {
    sweep(kDisk, 0.3, {{0, 0}, {0.2, 0}, {0.66, 0}}, {1.0}, 0.06, provider);
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("sweeps are deterministic across job counts and equivariant under rotation") {
  const auto provider = mesh_provider(0.05, 1.0, 20);
  const std::vector<double> t_grid{0.1, 0.5, 1.0};
  const std::vector<Point> px{{0, 0}, {0.15, 0}, {0.3, 0}, {0.45, 0}};
  const std::vector<Point> py{{0, 0}, {0, 0.15}, {0, 0.3}, {0, 0.45}};
  SweepOptions serial;
  serial.mesh_noise = false;
  SweepOptions parallel = serial;
  parallel.jobs = 2;
  const auto a = sweep(kDisk, 0.3, px, t_grid, 0.05, provider, serial);
  const auto b = sweep(kDisk, 0.3, px, t_grid, 0.05, provider, parallel);
  const auto y = sweep(kDisk, 0.3, py, t_grid, 0.05, provider, serial);
  REQUIRE(a.points.size() == 4);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].fingerprint == b.points[i].fingerprint);
    CHECK(a.points[i].Z == b.points[i].Z);
    CHECK(a.points[i].lambda1 == b.points[i].lambda1);
    REQUIRE(a.points[i].dzeta.has_value() == (i > 0));
    if (i > 0) CHECK(a.points[i].dzeta->value == b.points[i].dzeta->value);
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
      CHECK(std::abs(y.points[i].Z[j] / a.points[i].Z[j] - 1) < 5e-3);
    }
    CHECK(std::abs(y.points[i].lambda1 / a.points[i].lambda1 - 1) < 5e-3);
  }
  // Per-time and uniform-in-time monotonicity of Z.
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    CHECK(verify_monotone(a, Quantity::Z, Direction::Nondecreasing, 0.0, j).pass);
  }
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    for (std::size_t k = i + 1; k < a.points.size(); ++k) {
      for (std::size_t j = 0; j < t_grid.size(); ++j) {
        CHECK(a.points[i].Z[j] <= a.points[k].Z[j] + a.points[i].Z_err[j] + a.points[k].Z_err[j]);
      }
    }
  }
  CHECK(verify_monotone(a, Quantity::Lambda1, Direction::Nonincreasing).pass);
  CHECK(verify_monotone(a, Quantity::Det, Direction::Nonincreasing).pass);

  const auto dir = std::filesystem::temp_directory_path() / "specobs_sweep_csv";
  std::filesystem::create_directories(dir);
  write_sweep_csv(a, (dir / "s.csv").string(), "# header", "# footer");
  write_sweep_svg(a, (dir / "s.svg").string());
  std::ifstream in(dir / "s.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "# header");
  std::getline(in, line);
  CHECK(line.rfind("index,cx,cy,d,t,Z", 0) == 0);
  std::size_t rows = 0;
  while (std::getline(in, line) && line[0] != '#') ++rows;
  CHECK(rows == a.points.size() * t_grid.size());
  CHECK(line == "# footer");
  std::filesystem::remove_all(dir);
}

TEST_CASE("localization on a coarse square grid") {
  const auto sq = ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  LocalizationOptions opts;
  opts.h = 0.035;
  opts.spacing = 0.1;
  const auto rep = heart_localization(sq, 0.15, 0.5, mesh_provider(0.035, 1.0, 10), opts);
  CHECK(rep.heart.is_point());
  CHECK(rep.centers.size() >= 9);
  CHECK(distance(rep.centers[rep.argmin], {0.5, 0.5}) < 1e-9);
  CHECK(rep.argmin_near_heart);
  CHECK(rep.argmax_on_shell);
  for (std::size_t i = 0; i < rep.centers.size(); ++i) CHECK(rep.Z[i] >= rep.Z[rep.argmin]);

  LocalizationOptions coarse = opts;
  coarse.spacing = 0.3;
  CHECK_THROWS_AS(heart_localization(sq, 0.15, 0.5, mesh_provider(0.035, 1.0, 10), coarse), InvalidInput);
}

TEST_CASE("zeta'(0) grows and det shrinks as the obstacle leaves the centre") {
  const auto offset = solve_at({0.3, 0}, 0.3, 0.05, 60);
  const auto centred = solve_at({0, 0}, 0.3, 0.05, 60);
  const auto r = spectra::relative_zeta_prime(offset, centred);
  CHECK(r.value - r.error > 0.0);
  CHECK(r.below_cut >= 0.0);
  CHECK(r.det_ratio < 1.0);
}
