#include "specobs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "specobs/errors.hpp"
#include "specobs/format.hpp"

namespace specobs::geometry {

double norm(Point a) { return std::hypot(a.x, a.y); }
double distance(Point a, Point b) { return norm(a - b); }

Point rotate(Point p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

Point direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

// ---------------------------------------------------------------------------
// ConvexDomain

ConvexDomain ConvexDomain::disk(Point center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidInput("disk radius must be positive, got " + format_number(radius));
  }
  return ConvexDomain(Disk{center, radius});
}

ConvexDomain ConvexDomain::polygon(std::vector<Point> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw InvalidInput("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i) {
    const Point e0 = vertices[(i + 1) % n] - vertices[i];
    const Point e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    if (!(cross(e0, e1) > 0.0)) {
      throw InvalidInput("polygon must be strictly convex and counterclockwise (vertex " +
                         std::to_string((i + 1) % n) + ")");
    }
  }
  return ConvexDomain(std::move(vertices));
}

const Disk& ConvexDomain::as_disk() const {
  if (!is_disk()) throw InvalidInput("domain is not a disk");
  return std::get<Disk>(shape_);
}

const std::vector<Point>& ConvexDomain::vertices() const {
  if (is_disk()) throw InvalidInput("domain is not a polygon");
  return std::get<std::vector<Point>>(shape_);
}

std::pair<double, double> ConvexDomain::support(Point u) const {
  if (is_disk()) {
    const Disk& d = as_disk();
    const double c = dot(d.center, u);
    const double r = d.radius * norm(u);
    return {c - r, c + r};
  }
  double lo = dot(vertices().front(), u);
  double hi = lo;
  for (const Point& v : vertices()) {
    lo = std::min(lo, dot(v, u));
    hi = std::max(hi, dot(v, u));
  }
  return {lo, hi};
}

double ConvexDomain::area() const {
  if (is_disk()) return std::numbers::pi * as_disk().radius * as_disk().radius;
  return polygon_area(vertices());
}

double ConvexDomain::perimeter() const {
  if (is_disk()) return 2.0 * std::numbers::pi * as_disk().radius;
  const auto& v = vertices();
  double p = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) p += distance(v[i], v[(i + 1) % v.size()]);
  return p;
}

double ConvexDomain::diameter() const {
  if (is_disk()) return 2.0 * as_disk().radius;
  return polygon_diameter(vertices());
}

double ConvexDomain::boundary_distance(Point p) const {
  if (is_disk()) return as_disk().radius - distance(p, as_disk().center);
  const auto& v = vertices();
  const std::size_t n = v.size();
  double inside = std::numeric_limits<double>::infinity();
  bool is_inside = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Point e = v[(i + 1) % n] - v[i];
    const double s = cross(e, p - v[i]) / norm(e);
    inside = std::min(inside, s);
    if (s < 0.0) is_inside = false;
  }
  if (is_inside) return inside;
  return -distance_to_polygon(v, p);
}

std::string ConvexDomain::literal() const {
  std::ostringstream out;
  if (is_disk()) {
    const Disk& d = as_disk();
    if (d.center == Point{0.0, 0.0}) {
      out << "disk(" << format_number(d.radius) << ")";
    } else {
      out << "disk(" << format_number(d.radius) << ",(" << format_number(d.center.x) << ","
          << format_number(d.center.y) << "))";
    }
    return out.str();
  }
  out << "polygon(";
  const auto& v = vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ",";
    out << "(" << format_number(v[i].x) << "," << format_number(v[i].y) << ")";
  }
  out << ")";
  return out.str();
}

ConvexDomain ConvexDomain::transformed(double angle, Point shift) const {
  if (is_disk()) {
    return disk(rotate(as_disk().center, angle) + shift, as_disk().radius);
  }
  std::vector<Point> moved;
  for (const Point& v : vertices()) moved.push_back(rotate(v, angle) + shift);
  return polygon(std::move(moved));
}

// ---------------------------------------------------------------------------
// ObstacleDomain

ObstacleDomain ObstacleDomain::make(ConvexDomain outer, Point center, double radius) {
  if (!(radius > 0.0)) {
    throw InvalidInput("obstacle radius must be positive, got " + format_number(radius));
  }
  const double dist = outer.boundary_distance(center);
  if (!(dist > radius)) {
    throw InvalidInput("obstacle must lie strictly inside the outer domain: dist(center, boundary) = " +
                       format_number(dist) + " must exceed r = " + format_number(radius));
  }
  return ObstacleDomain{std::move(outer), center, radius};
}

double ObstacleDomain::area() const {
  return outer.area() - std::numbers::pi * radius * radius;
}

double ObstacleDomain::perimeter() const {
  return outer.perimeter() + 2.0 * std::numbers::pi * radius;
}

double ObstacleDomain::clearance() const { return outer.boundary_distance(center) - radius; }

// ---------------------------------------------------------------------------
// Interior reflection and the heart

bool contains(const ConvexDomain& domain, Point p, double tol) {
  if (tol < 0.0) throw InvalidInput("containment tolerance must be nonnegative");
  if (domain.is_disk()) {
    const Disk& d = domain.as_disk();
    return distance(p, d.center) <= d.radius + tol;
  }
  const auto& v = domain.vertices();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point e = v[(i + 1) % n] - v[i];
    if (cross(e, p - v[i]) / norm(e) < -tol) return false;
  }
  return true;
}

namespace {

void check_unit(Point u) {
  if (std::abs(norm(u) - 1.0) > 1e-9) {
    throw InvalidInput("fold direction must be a unit vector");
  }
}

Point reflect(Point p, Point u, double t) { return p - 2.0 * (dot(p, u) - t) * u; }

// Validity test without the interior precondition; used by the scan.
bool fold_valid(const ConvexDomain& domain, Point u, double t, double tol) {
  if (domain.is_disk()) {
    // The reflected cap stays inside iff the center is on the big side.
    return t >= dot(domain.as_disk().center, u) - tol;
  }
  const auto& v = domain.vertices();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double si = dot(v[i], u) - t;
    if (si > 0.0 && !contains(domain, reflect(v[i], u, t), tol)) return false;
    // Crossing points of the fold line with the boundary lie on the line and
    // are fixed by the reflection; they are tested for completeness.
    const double sj = dot(v[(i + 1) % n], u) - t;
    if ((si > 0.0) != (sj > 0.0) && si != sj) {
      const double a = si / (si - sj);
      const Point crossing = v[i] + a * (v[(i + 1) % n] - v[i]);
      if (!contains(domain, reflect(crossing, u, t), tol)) return false;
    }
  }
  return true;
}

}  // namespace

bool is_interior_reflection(const ConvexDomain& domain, const FoldLine& fold, double tol) {
  check_unit(fold.direction);
  const auto [lo, hi] = domain.support(fold.direction);
  if (!(fold.offset > lo && fold.offset < hi)) {
    throw InvalidInput("fold line does not meet the interior of the domain");
  }
  return fold_valid(domain, fold.direction, fold.offset, tol);
}

double max_fold_offset(const ConvexDomain& domain, Point u, double tol) {
  check_unit(u);
  const auto [lo, hi] = domain.support(u);
  const double diam = domain.diameter();
  const double containment_tol = std::max(tol, 1e-12 * diam);
  constexpr int kScan = 64;
  double valid = hi;
  double invalid = hi;
  bool found_invalid = false;
  for (int i = 1; i < kScan; ++i) {
    const double t = hi - (hi - lo) * static_cast<double>(i) / kScan;
    if (fold_valid(domain, u, t, containment_tol)) {
      valid = t;
    } else {
      invalid = t;
      found_invalid = true;
      break;
    }
  }
  if (!found_invalid) return valid;
  if (valid == hi && !fold_valid(domain, u, hi - 1e-9 * (hi - lo), containment_tol)) {
    // No valid fold in the scanned range: vacuous constraint.
    return hi;
  }
  const double width_tol = std::max(tol, 1e-12 * diam);
  for (int it = 0; it < 60 && valid - invalid > width_tol; ++it) {
    const double mid = 0.5 * (valid + invalid);
    if (fold_valid(domain, u, mid, containment_tol)) {
      valid = mid;
    } else {
      invalid = mid;
    }
  }
  return valid;
}

namespace {

std::vector<Point> initial_polygon(const ConvexDomain& domain) {
  if (!domain.is_disk()) return domain.vertices();
  const Disk& d = domain.as_disk();
  const double r = d.radius;
  return {d.center + Point{-r, -r}, d.center + Point{r, -r}, d.center + Point{r, r},
          d.center + Point{-r, r}};
}

std::vector<Point> intersect_all(const ConvexDomain& domain, std::span<const Point> dirs,
                                 std::span<const double> offsets, double relax) {
  std::vector<Point> poly = initial_polygon(domain);
  for (std::size_t j = 0; j < dirs.size() && !poly.empty(); ++j) {
    poly = clip_halfplane(poly, dirs[j], offsets[j] + relax);
  }
  return poly;
}

}  // namespace

HeartPolygon compute_heart(const ConvexDomain& domain, int direction_count, double tol) {
  if (direction_count < 8) throw InvalidInput("heart needs at least 8 directions");
  const int m = direction_count;
  std::vector<Point> dirs(m);
  std::vector<double> offsets(m);
  for (int j = 0; j < m; ++j) {
    const double theta = (2.0 * std::numbers::pi * j) / m;
    dirs[j] = direction(theta);
    offsets[j] = max_fold_offset(domain, dirs[j], 0.0);
  }
  const double diam = domain.diameter();
  const double degenerate_width = std::max(tol, 1e-7 * diam);

  HeartPolygon heart;
  heart.direction_count = m;
  std::vector<Point> poly = intersect_all(domain, dirs, offsets, 0.0);
  if (poly.size() >= 3 && polygon_diameter(poly) >= degenerate_width) {
    heart.vertices = std::move(poly);
    return heart;
  }
  if (poly.size() >= 3 || (!poly.empty() && polygon_diameter(poly) < degenerate_width)) {
    heart.vertices = {polygon_centroid(poly)};
    return heart;
  }
  // Numerically empty: relax all offsets uniformly to the smallest slack that
  // makes the intersection nonempty (Chebyshev center of the constraint set).
  double lo = 0.0;
  double hi = 1e-9 * diam;
  while (intersect_all(domain, dirs, offsets, hi).size() < 3) {
    lo = hi;
    hi *= 2.0;
    if (hi > diam) throw NumericalFailure("heart constraints are inconsistent");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (intersect_all(domain, dirs, offsets, mid).size() >= 3) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  heart.vertices = {polygon_centroid(intersect_all(domain, dirs, offsets, hi))};
  return heart;
}

Point HeartPolygon::centroid() const {
  if (vertices.size() < 3) {
    Point c;
    for (const Point& v : vertices) c = c + v;
    return (1.0 / static_cast<double>(vertices.size())) * c;
  }
  return polygon_centroid(vertices);
}

double HeartPolygon::diameter() const { return polygon_diameter(vertices); }

// ---------------------------------------------------------------------------
// Convex polygon utilities

std::vector<Point> clip_halfplane(std::span<const Point> polygon, Point u, double t) {
  std::vector<Point> out;
  const std::size_t n = polygon.size();
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = polygon[i];
    const Point b = polygon[(i + 1) % n];
    const double sa = dot(a, u) - t;
    const double sb = dot(b, u) - t;
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      const double w = sa / (sa - sb);
      out.push_back(a + w * (b - a));
    }
  }
  // Drop consecutive duplicates produced by vertices on the line.
  std::vector<Point> cleaned;
  for (const Point& p : out) {
    if (cleaned.empty() || !(p == cleaned.back())) cleaned.push_back(p);
  }
  if (cleaned.size() > 1 && cleaned.front() == cleaned.back()) cleaned.pop_back();
  return cleaned;
}

double polygon_area(std::span<const Point> polygon) {
  double a = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * a;
}

Point polygon_centroid(std::span<const Point> polygon) {
  const std::size_t n = polygon.size();
  const double a = polygon_area(polygon);
  if (n < 3 || std::abs(a) < 1e-300) {
    Point c;
    for (const Point& v : polygon) c = c + v;
    return (1.0 / static_cast<double>(std::max<std::size_t>(n, 1))) * c;
  }
  // Relative to the first vertex for accuracy on tiny polygons.
  const Point o = polygon[0];
  double cx = 0.0;
  double cy = 0.0;
  double aa = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = polygon[i] - o;
    const Point q = polygon[(i + 1) % n] - o;
    const double w = cross(p, q);
    aa += w;
    cx += (p.x + q.x) * w;
    cy += (p.y + q.y) * w;
  }
  if (std::abs(aa) < 1e-300) {
    Point c;
    for (const Point& v : polygon) c = c + v;
    return (1.0 / static_cast<double>(n)) * c;
  }
  return o + Point{cx / (3.0 * aa), cy / (3.0 * aa)};
}

double polygon_diameter(std::span<const Point> polygon) {
  double d = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    for (std::size_t j = i + 1; j < polygon.size(); ++j) {
      d = std::max(d, distance(polygon[i], polygon[j]));
    }
  }
  return d;
}

double distance_to_polygon(std::span<const Point> polygon, Point p) {
  const std::size_t n = polygon.size();
  if (n == 0) return std::numeric_limits<double>::infinity();
  if (n == 1) return distance(polygon[0], p);
  bool inside = n >= 3;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = polygon[i];
    const Point b = polygon[(i + 1) % n];
    const Point e = b - a;
    const double len2 = dot(e, e);
    double w = len2 > 0.0 ? dot(p - a, e) / len2 : 0.0;
    w = std::clamp(w, 0.0, 1.0);
    best = std::min(best, distance(p, a + w * e));
    if (cross(e, p - a) < 0.0) inside = false;
  }
  return inside ? 0.0 : best;
}

std::vector<Point> collapse_polygon(std::span<const Point> polygon, double merge_distance,
                                    double min_turn) {
  std::vector<Point> v(polygon.begin(), polygon.end());
  bool changed = true;
  while (changed && v.size() > 1) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() > 1; ++i) {
      const std::size_t n = v.size();
      const Point prev = v[(i + n - 1) % n];
      const Point next = v[(i + 1) % n];
      if (distance(v[i], next) < merge_distance) {
        v[i] = 0.5 * (v[i] + next);
        v.erase(v.begin() + static_cast<std::ptrdiff_t>((i + 1) % n));
        changed = true;
        break;
      }
      if (n >= 3) {
        const Point a = v[i] - prev;
        const Point b = next - v[i];
        const double turn = std::atan2(cross(a, b), dot(a, b));
        if (std::abs(turn) < min_turn) {
          v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
          changed = true;
          break;
        }
      }
    }
  }
  return v;
}

}  // namespace specobs::geometry
