#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace specobs::geometry {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend Point operator*(Point a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point a);
double distance(Point a, Point b);
/// Counterclockwise rotation by `angle` radians about the origin.
Point rotate(Point p, double angle);
/// Unit vector (cos angle, sin angle).
Point direction(double angle);

struct Disk {
  Point center;
  double radius = 0.0;
};

/// Outer domain D: a disk or a strictly convex polygon (counterclockwise).
class ConvexDomain {
 public:
  static ConvexDomain disk(Point center, double radius);
  static ConvexDomain polygon(std::vector<Point> vertices);

  bool is_disk() const { return std::holds_alternative<Disk>(shape_); }
  const Disk& as_disk() const;
  const std::vector<Point>& vertices() const;

  /// Interval [min, max] of <p,u> over the closed domain.
  std::pair<double, double> support(Point u) const;
  double area() const;
  double perimeter() const;
  double diameter() const;
  /// Signed distance to the boundary, positive inside.
  double boundary_distance(Point p) const;
  /// Canonical literal, e.g. "disk(1)" or "polygon((0,0),(1,0),(0,1))".
  std::string literal() const;
  /// Image under rotation by `angle` about the origin followed by `shift`.
  ConvexDomain transformed(double angle, Point shift) const;

 private:
  explicit ConvexDomain(std::variant<Disk, std::vector<Point>> shape)
      : shape_(std::move(shape)) {}
  std::variant<Disk, std::vector<Point>> shape_;
};

/// Omega(x) = D minus the closed disk B(center, radius).
struct ObstacleDomain {
  ConvexDomain outer;
  Point center;
  double radius = 0.0;

  /// Throws InvalidInput unless radius > 0 and dist(center, boundary) > radius.
  static ObstacleDomain make(ConvexDomain outer, Point center, double radius);
  double area() const;
  double perimeter() const;
  /// Clearance dist(center, boundary of D) - radius.
  double clearance() const;
};

/// Line <p,u> = offset; the small side is {<p,u> > offset}.
struct FoldLine {
  Point direction;
  double offset = 0.0;
};

struct HeartPolygon {
  std::vector<Point> vertices;  // counterclockwise; one vertex when degenerate
  int direction_count = 0;

  bool is_point() const { return vertices.size() == 1; }
  Point centroid() const;
  double diameter() const;
};

bool contains(const ConvexDomain& domain, Point p, double tol);

/// Whether reflecting the small side of `fold` across the fold line lands in
/// the closed domain.  Throws InvalidInput if the line misses the interior.
bool is_interior_reflection(const ConvexDomain& domain, const FoldLine& fold, double tol);

/// Deepest valid fold offset in direction u (coarse scan, then bisection).
double max_fold_offset(const ConvexDomain& domain, Point u, double tol);

/// Intersection of D with the big sides {<p,u_j> <= t*(u_j)} over M uniform
/// directions.  Collapses to a point when narrower than the degeneracy width.
HeartPolygon compute_heart(const ConvexDomain& domain, int direction_count, double tol = 0.0);

// Convex polygon utilities.

/// Sutherland-Hodgman clip of a convex polygon by {<p,u> <= t}.
std::vector<Point> clip_halfplane(std::span<const Point> polygon, Point u, double t);
double polygon_area(std::span<const Point> polygon);
Point polygon_centroid(std::span<const Point> polygon);
double polygon_diameter(std::span<const Point> polygon);
/// Distance from p to the closed convex polygon (0 inside).
double distance_to_polygon(std::span<const Point> polygon, Point p);
/// Merge vertices closer than `merge_distance` and drop vertices whose
/// turning angle is below `min_turn` radians.
std::vector<Point> collapse_polygon(std::span<const Point> polygon, double merge_distance,
                                    double min_turn);

}  // namespace specobs::geometry
