#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include "specobs/errors.hpp"
#include "specobs/mesher.hpp"

using namespace specobs;
using namespace specobs::geometry;
using namespace specobs::mesh;

namespace {

const double kPi = std::numbers::pi;

ObstacleDomain annulus(double d, double r = 0.5) {
  return ObstacleDomain::make(ConvexDomain::disk({0, 0}, 1), {d, 0}, r);
}

double angle_at(Point a, Point b, Point c) {
  const Point u = b - a, v = c - a;
  return std::acos(std::clamp(dot(u, v) / (norm(u) * norm(v)), -1.0, 1.0));
}

double min_angle_deg(const Mesh& m) {
  double best = 180.0;
  for (const auto& t : m.triangles) {
    const Point a = m.nodes[t[0]], b = m.nodes[t[1]], c = m.nodes[t[2]];
    best = std::min({best, angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)});
  }
  return best * 180.0 / kPi;
}

double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

}  // namespace

TEST_CASE("polygonize vertex counts") {
  const auto disk_loops = polygonize(ConvexDomain::disk({0, 0}, 1), 0.1);
  CHECK(disk_loops.outer.size() == 64);
  CHECK(disk_loops.obstacle.empty());

  const auto om = annulus(0.0, 0.3);
  const auto loops = polygonize(om, 0.05);
  CHECK(loops.obstacle.size() == 40);
  CHECK(loops.outer.size() % 4 == 0);

  const auto sq = polygonize(ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 2.0);
  CHECK(sq.outer.size() == 4);
  const auto sq_fine = polygonize(ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 0.1);
  CHECK(sq_fine.outer.size() == 40);
}

TEST_CASE("polygonized loops sample the true boundaries") {
  const auto om = ObstacleDomain::make(ConvexDomain::disk({0.2, -0.1}, 1.3), {0.5, 0.1}, 0.3);
  const auto loops = polygonize(om, 0.04, 0.5);
  for (const Point& p : loops.outer) CHECK(std::abs(distance(p, {0.2, -0.1}) - 1.3) < 1e-12);
  for (const Point& p : loops.obstacle) CHECK(std::abs(distance(p, {0.5, 0.1}) - 0.3) < 1e-12);
  for (std::size_t i = 0; i < loops.obstacle.size(); ++i) {
    CHECK(distance(loops.obstacle[i], loops.obstacle[(i + 1) % loops.obstacle.size()]) <= 0.02 + 1e-12);
  }
  // Orientation: outer counterclockwise, obstacle clockwise.
  CHECK(polygon_area(loops.outer) > 0.0);
  std::vector<Point> rev(loops.obstacle.rbegin(), loops.obstacle.rend());
  CHECK(polygon_area(rev) > 0.0);
  CHECK_THROWS_AS(polygonize(om, 0.1), InvalidInput);  // h >= r/4
}

TEST_CASE("concentric annulus mesh quality") {
  const auto m = mesh_domain(annulus(0.0), 0.05);
  const auto q = check_mesh(m);
  CHECK(q.min_angle_deg >= 20.0);
  CHECK(min_angle_deg(m) >= 20.0);
  CHECK(q.max_edge <= 0.05 + 1e-12);
  CHECK(q.min_signed_area > 0.0);
  CHECK(q.loops_closed);
  CHECK(q.conforming);
  CHECK(q.euler_characteristic == 0);
  CHECK(m.obstacle_edge_count() > 0);
  CHECK(m.outer_edge_count() > 0);
}

TEST_CASE("graded mesh refines near the obstacle") {
  const auto m = mesh_domain(annulus(0.0), 0.05, 0.5);
  CHECK(check_mesh(m).min_angle_deg >= 20.0);
  std::set<std::pair<int, int>> edges;
  for (const auto& t : m.triangles) {
    for (int i = 0; i < 3; ++i) edges.emplace(std::min(t[i], t[(i + 1) % 3]), std::max(t[i], t[(i + 1) % 3]));
  }
  int near = 0;
  for (const auto& [a, b] : edges) {
    const Point mid = 0.5 * (m.nodes[a] + m.nodes[b]);
    if (norm(mid) - 0.5 < 0.5) {
      ++near;
      CHECK(distance(m.nodes[a], m.nodes[b]) <= 0.025 + 1e-12);
    }
  }
  CHECK(near > 100);
}

TEST_CASE("touching obstacles are rejected") {
  CHECK_THROWS_AS(annulus(0.5), InvalidInput);
  BoundaryLoops loops = polygonize(annulus(0.0), 0.05);
  for (Point& p : loops.obstacle) p = p + Point{0.5, 0};  // crosses the outer loop
  CHECK_THROWS_AS(triangulate(loops, 0.05), InvalidInput);
}

TEST_CASE("mesh conformity and orientation by brute force") {
  const auto m = mesh_domain(ObstacleDomain::make(ConvexDomain::polygon({{0, 0}, {1, 0}, {0.38, 0.82}}),
                                                  {0.45, 0.28}, 0.1),
                             0.02);
  for (const auto& t : m.triangles) {
    const Point a = m.nodes[t[0]], b = m.nodes[t[1]], c = m.nodes[t[2]];
    CHECK(signed_area(a, b, c) > 0.0);
    const double scale = 1e-12;
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
      if (static_cast<int>(i) == t[0] || static_cast<int>(i) == t[1] || static_cast<int>(i) == t[2]) continue;
      const Point p = m.nodes[i];
      const bool inside = signed_area(a, b, p) > scale && signed_area(b, c, p) > scale &&
                          signed_area(c, a, p) > scale;
      if (inside) FAIL("node strictly inside a triangle");
    }
  }
  // Each interior edge is shared by exactly two triangles, boundary edges by one.
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.triangles) {
    for (int i = 0; i < 3; ++i) ++count[{std::min(t[i], t[(i + 1) % 3]), std::max(t[i], t[(i + 1) % 3])}];
  }
  std::size_t singles = 0;
  for (const auto& [e, c] : count) {
    CHECK((c == 1 || c == 2));
    singles += c == 1;
  }
  CHECK(singles == m.boundary_edges.size());
  CHECK(static_cast<long>(m.nodes.size()) - static_cast<long>(count.size()) +
            static_cast<long>(m.triangles.size()) ==
        0);
}

TEST_CASE("mesh area converges at second order") {
  const double exact = kPi * 0.75;
  double prev = 0.0, prev_h = 0.0;
  for (double h : {0.1, 0.05, 0.025}) {
    const double area = mesh_domain(annulus(0.0), h).area();
    CHECK(std::abs(area - exact) <= 0.05 * h * h);  // frozen regression constant
    if (prev_h > 0.0) CHECK(std::abs(area - prev) <= 0.05 * prev_h * prev_h);
    prev = area;
    prev_h = h;
  }
}

TEST_CASE("node ordering is deterministic") {
  const auto om = ObstacleDomain::make(ConvexDomain::disk({0, 0}, 1), {0.2, 0.1}, 0.3);
  const auto a = mesh_domain(om, 0.05);
  const auto b = mesh_domain(om, 0.05);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].x == b.nodes[i].x);
    CHECK(a.nodes[i].y == b.nodes[i].y);
  }
  CHECK(a.triangles == b.triangles);
  for (std::size_t i = 1; i < a.nodes.size(); ++i) {
    CHECK(std::tie(a.nodes[i - 1].y, a.nodes[i - 1].x) <= std::tie(a.nodes[i].y, a.nodes[i].x));
  }
}

TEST_CASE("mesh CSV export") {
  const auto dir = std::filesystem::temp_directory_path() / "specobs_mesh_csv";
  std::filesystem::create_directories(dir);
  const auto m = mesh_domain(annulus(0.0, 0.3), 0.07);
  const std::string stem = (dir / "m").string();
  write_mesh_csv(m, stem, "# test");
  for (const char* part : {"_nodes.csv", "_triangles.csv", "_edges.csv"}) {
    std::ifstream in(stem + part);
    REQUIRE(in.good());
    std::string first;
    std::getline(in, first);
    CHECK(first == "# test");
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines > 2);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("translating the obstacle keeps the outer boundary and connectivity") {
  const auto m = mesh_domain(annulus(0.1, 0.3), 0.05);
  const auto moved = translate_obstacle(m, {1, 0}, 1e-3);
  CHECK(moved.triangles == m.triangles);
  CHECK(check_mesh(moved).min_signed_area > 0.0);
  for (const auto& e : m.boundary_edges) {
    const Point shift = moved.nodes[e.a] - m.nodes[e.a];
    if (e.tag == BoundaryTag::Outer) {
      CHECK(norm(shift) == 0.0);
    } else {
      CHECK(std::abs(shift.x - 1e-3) < 1e-15);
      CHECK(std::abs(shift.y) < 1e-15);
    }
  }
  REQUIRE(moved.domain.has_value());
  CHECK(moved.domain->center.x == doctest::Approx(0.101));
}
