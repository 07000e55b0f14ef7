#include "specobs/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "specobs/errors.hpp"

namespace specobs::mesh {

namespace {

// Enough bits that differences and products of the coordinates used here are
// represented exactly.
using Exact = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<640, boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;

constexpr double kEps = std::numeric_limits<double>::epsilon() * 0.5;
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIncircleBound = (10.0 + 96.0 * kEps) * kEps;

int sign_of(const Exact& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

int orient_exact(Point a, Point b, Point c) {
  const Exact acx = Exact(a.x) - Exact(c.x);
  const Exact bcx = Exact(b.x) - Exact(c.x);
  const Exact acy = Exact(a.y) - Exact(c.y);
  const Exact bcy = Exact(b.y) - Exact(c.y);
  return sign_of(acx * bcy - acy * bcx);
}

int incircle_exact(Point a, Point b, Point c, Point d) {
  const Exact adx = Exact(a.x) - Exact(d.x);
  const Exact ady = Exact(a.y) - Exact(d.y);
  const Exact bdx = Exact(b.x) - Exact(d.x);
  const Exact bdy = Exact(b.y) - Exact(d.y);
  const Exact cdx = Exact(c.x) - Exact(d.x);
  const Exact cdy = Exact(c.y) - Exact(d.y);
  const Exact alift = adx * adx + ady * ady;
  const Exact blift = bdx * bdx + bdy * bdy;
  const Exact clift = cdx * cdx + cdy * cdy;
  const Exact det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                    clift * (adx * bdy - bdx * ady);
  return sign_of(det);
}

}  // namespace

int orient2d(Point a, Point b, Point c) {
  const double detleft = (a.x - c.x) * (b.y - c.y);
  const double detright = (a.y - c.y) * (b.x - c.x);
  const double det = detleft - detright;
  const double bound = kOrientBound * (std::abs(detleft) + std::abs(detright));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return orient_exact(a, b, c);
}

int incircle(Point a, Point b, Point c, Point d) {
  const double adx = a.x - d.x;
  const double bdx = b.x - d.x;
  const double cdx = c.x - d.x;
  const double ady = a.y - d.y;
  const double bdy = b.y - d.y;
  const double cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy;
  const double cdxbdy = cdx * bdy;
  const double alift = adx * adx + ady * ady;
  const double cdxady = cdx * ady;
  const double adxcdy = adx * cdy;
  const double blift = bdx * bdx + bdy * bdy;
  const double adxbdy = adx * bdy;
  const double bdxady = bdx * ady;
  const double clift = cdx * cdx + cdy * cdy;
  const double det =
      alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kIncircleBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return incircle_exact(a, b, c, d);
}

Point circumcenter(Point a, Point b, Point c) {
  const Point ab = b - a;
  const Point ac = c - a;
  const double d = 2.0 * geometry::cross(ab, ac);
  const double ab2 = geometry::dot(ab, ab);
  const double ac2 = geometry::dot(ac, ac);
  return a + Point{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
}

// ---------------------------------------------------------------------------

DelaunayTriangulation::DelaunayTriangulation(Point lower, Point upper) {
  const Point c = 0.5 * (lower + upper);
  const double extent = std::max({upper.x - lower.x, upper.y - lower.y, 1e-6});
  const double r = 30.0 * extent;
  constexpr double kPi = 3.14159265358979323846;
  for (int k = 0; k < 3; ++k) {
    const double theta = kPi / 2.0 + 2.0 * kPi * k / 3.0;
    points_.push_back(c + r * geometry::direction(theta));
  }
  triangles_.push_back(Triangle{{0, 1, 2}, {-1, -1, -1}});
  vertex_triangle_ = {0, 0, 0};
}

int DelaunayTriangulation::edge_index(int t, int a, int b) const {
  const auto& v = triangles_[static_cast<std::size_t>(t)].v;
  for (int i = 0; i < 3; ++i) {
    if (v[i] != a && v[i] != b) return i;
  }
  return -1;
}

void DelaunayTriangulation::set_neighbor(int t, int old_nbr, int new_nbr) {
  if (t < 0) return;
  auto& tri = triangles_[static_cast<std::size_t>(t)];
  for (int i = 0; i < 3; ++i) {
    if (tri.nbr[i] == old_nbr) {
      tri.nbr[i] = new_nbr;
      return;
    }
  }
}

void DelaunayTriangulation::touch(int t) { touched_.push_back(t); }

DelaunayTriangulation::Location DelaunayTriangulation::locate(Point p) const {
  int t = std::clamp(last_triangle_, 0, static_cast<int>(triangles_.size()) - 1);
  const std::size_t cap = 4 * triangles_.size() + 64;
  for (std::size_t step = 0; step < cap; ++step) {
    const Triangle& tri = triangles_[static_cast<std::size_t>(t)];
    int moved = -1;
    int zero_count = 0;
    int zero_edge = -1;
    const int start = static_cast<int>(step % 3);
    for (int k = 0; k < 3; ++k) {
      const int i = (start + k) % 3;
      const Point a = point(tri.v[(i + 1) % 3]);
      const Point b = point(tri.v[(i + 2) % 3]);
      const int o = orient2d(a, b, p);
      if (o < 0) {
        moved = i;
        break;
      }
      if (o == 0) {
        ++zero_count;
        zero_edge = i;
      }
    }
    if (moved >= 0) {
      const int next = tri.nbr[moved];
      if (next < 0) throw NumericalFailure("point outside the enclosing triangle");
      t = next;
      continue;
    }
    Location loc;
    loc.triangle = t;
    for (int i = 0; i < 3; ++i) {
      if (point(tri.v[i]) == p) loc.vertex = tri.v[i];
    }
    if (loc.vertex < 0 && zero_count == 1) loc.edge = zero_edge;
    return loc;
  }
  throw NumericalFailure("point location did not terminate");
}

int DelaunayTriangulation::insert(Point p) {
  touched_.clear();
  const Location loc = locate(p);
  if (loc.vertex >= 0) return loc.vertex;
  const int v = static_cast<int>(points_.size());
  points_.push_back(p);
  vertex_triangle_.push_back(loc.triangle);
  if (loc.edge >= 0) {
    split_edge(loc.triangle, loc.edge, v);
  } else {
    split_triangle(loc.triangle, v);
  }
  return v;
}

void DelaunayTriangulation::split_triangle(int t, int v) {
  const Triangle old = triangles_[static_cast<std::size_t>(t)];
  const int a = old.v[0];
  const int b = old.v[1];
  const int c = old.v[2];
  const int na = old.nbr[0];
  const int nb = old.nbr[1];
  const int nc = old.nbr[2];
  const int t1 = static_cast<int>(triangles_.size());
  const int t2 = t1 + 1;
  triangles_[static_cast<std::size_t>(t)] = Triangle{{b, c, v}, {t1, t2, na}};
  triangles_.push_back(Triangle{{c, a, v}, {t2, t, nb}});
  triangles_.push_back(Triangle{{a, b, v}, {t, t1, nc}});
  set_neighbor(nb, t, t1);
  set_neighbor(nc, t, t2);
  vertex_triangle_[static_cast<std::size_t>(a)] = t1;
  vertex_triangle_[static_cast<std::size_t>(b)] = t;
  vertex_triangle_[static_cast<std::size_t>(c)] = t;
  vertex_triangle_[static_cast<std::size_t>(v)] = t;
  touch(t);
  touch(t1);
  touch(t2);
  legalize(v, {{t, 2}, {t1, 2}, {t2, 2}});
}

void DelaunayTriangulation::split_edge(int t, int e, int v) {
  const Triangle told = triangles_[static_cast<std::size_t>(t)];
  const int a = told.v[e];
  const int p = told.v[(e + 1) % 3];
  const int q = told.v[(e + 2) % 3];
  const int t_q = told.nbr[(e + 2) % 3];  // across (a,p)
  const int t_p = told.nbr[(e + 1) % 3];  // across (q,a)
  const int u = told.nbr[e];
  if (u < 0) throw NumericalFailure("cannot split a hull edge of the enclosing triangle");
  const Triangle uold = triangles_[static_cast<std::size_t>(u)];
  const int ib = edge_index(u, p, q);
  const int b = uold.v[ib];
  int u_p = -1;  // across (b,q)
  int u_q = -1;  // across (p,b)
  for (int i = 0; i < 3; ++i) {
    if (uold.v[i] == p) u_p = uold.nbr[i];
    if (uold.v[i] == q) u_q = uold.nbr[i];
  }
  const int t1 = static_cast<int>(triangles_.size());
  const int u1 = t1 + 1;
  triangles_[static_cast<std::size_t>(t)] = Triangle{{a, p, v}, {u1, t1, t_q}};
  triangles_.push_back(Triangle{{a, v, q}, {u, t_p, t}});
  triangles_[static_cast<std::size_t>(u)] = Triangle{{b, q, v}, {t1, u1, u_p}};
  triangles_.push_back(Triangle{{b, v, p}, {t, u_q, u}});
  set_neighbor(t_p, t, t1);
  set_neighbor(u_q, u, u1);
  vertex_triangle_[static_cast<std::size_t>(a)] = t;
  vertex_triangle_[static_cast<std::size_t>(p)] = t;
  vertex_triangle_[static_cast<std::size_t>(q)] = u;
  vertex_triangle_[static_cast<std::size_t>(b)] = u;
  vertex_triangle_[static_cast<std::size_t>(v)] = t;
  touch(t);
  touch(t1);
  touch(u);
  touch(u1);
  legalize(v, {{t, 2}, {t1, 1}, {u, 2}, {u1, 1}});
}

void DelaunayTriangulation::legalize(int v, std::vector<std::pair<int, int>> stack) {
  while (!stack.empty()) {
    const auto [t, i] = stack.back();
    stack.pop_back();
    Triangle& tri = triangles_[static_cast<std::size_t>(t)];
    if (tri.v[i] != v) continue;
    const int n = tri.nbr[i];
    if (n < 0) continue;
    const int p = tri.v[(i + 1) % 3];
    const int q = tri.v[(i + 2) % 3];
    const int j = edge_index(n, p, q);
    const Triangle nold = triangles_[static_cast<std::size_t>(n)];
    const int d = nold.v[j];
    if (incircle(point(tri.v[0]), point(tri.v[1]), point(tri.v[2]), point(d)) <= 0) continue;

    const int t_p = tri.nbr[(i + 1) % 3];  // across (q,v)
    const int t_q = tri.nbr[(i + 2) % 3];  // across (v,p)
    int n_q = -1;                          // across (p,d)
    int n_p = -1;                          // across (d,q)
    for (int k = 0; k < 3; ++k) {
      if (nold.v[k] == q) n_q = nold.nbr[k];
      if (nold.v[k] == p) n_p = nold.nbr[k];
    }
    triangles_[static_cast<std::size_t>(t)] = Triangle{{v, p, d}, {n_q, n, t_q}};
    triangles_[static_cast<std::size_t>(n)] = Triangle{{v, d, q}, {n_p, t_p, t}};
    set_neighbor(n_q, n, t);
    set_neighbor(t_p, t, n);
    vertex_triangle_[static_cast<std::size_t>(v)] = t;
    vertex_triangle_[static_cast<std::size_t>(p)] = t;
    vertex_triangle_[static_cast<std::size_t>(d)] = t;
    vertex_triangle_[static_cast<std::size_t>(q)] = n;
    touch(t);
    touch(n);
    stack.emplace_back(t, 0);
    stack.emplace_back(n, 0);
  }
  last_triangle_ = vertex_triangle_[static_cast<std::size_t>(v)];
  std::sort(touched_.begin(), touched_.end());
  touched_.erase(std::unique(touched_.begin(), touched_.end()), touched_.end());
}

std::vector<int> DelaunayTriangulation::incident_triangles(int v) const {
  std::vector<int> fan;
  const int start = vertex_triangle_[static_cast<std::size_t>(v)];
  int t = start;
  // Counterclockwise around v.
  while (true) {
    fan.push_back(t);
    const Triangle& tri = triangles_[static_cast<std::size_t>(t)];
    int k = 0;
    while (tri.v[k] != v) ++k;
    const int next = tri.nbr[(k + 2) % 3];
    if (next == start) return fan;
    if (next < 0) break;
    t = next;
  }
  // Open fan (enclosing vertices): walk clockwise from the start as well.
  t = start;
  while (true) {
    const Triangle& tri = triangles_[static_cast<std::size_t>(t)];
    int k = 0;
    while (tri.v[k] != v) ++k;
    const int prev = tri.nbr[(k + 1) % 3];
    if (prev < 0) break;
    fan.push_back(prev);
    t = prev;
  }
  return fan;
}

std::vector<int> DelaunayTriangulation::neighbors(int v) const {
  std::vector<int> out;
  for (int t : incident_triangles(v)) {
    for (int w : triangles_[static_cast<std::size_t>(t)].v) {
      if (w != v) out.push_back(w);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int DelaunayTriangulation::find_directed_edge(int a, int b) const {
  for (int t : incident_triangles(a)) {
    const auto& v = triangles_[static_cast<std::size_t>(t)].v;
    for (int k = 0; k < 3; ++k) {
      if (v[k] == a && v[(k + 1) % 3] == b) return t;
    }
  }
  return -1;
}

}  // namespace specobs::mesh
