#pragma once

#include <array>
#include <vector>

#include "specobs/geometry.hpp"

namespace specobs::mesh {

using geometry::Point;

/// Sign of the oriented area of (a, b, c): +1 counterclockwise, -1 clockwise,
/// 0 collinear.  Exact (floating-point filter with a multiprecision fallback).
int orient2d(Point a, Point b, Point c);

/// +1 if d lies strictly inside the circle through counterclockwise a, b, c,
/// -1 if outside, 0 if cocircular.  Exact.
int incircle(Point a, Point b, Point c, Point d);

Point circumcenter(Point a, Point b, Point c);

/// Incremental Delaunay triangulation (Lawson flips) inside a large
/// enclosing triangle.  Vertices 0..2 are the enclosing triangle.
class DelaunayTriangulation {
 public:
  struct Triangle {
    std::array<int, 3> v{};    // counterclockwise
    std::array<int, 3> nbr{};  // nbr[i] is across the edge opposite v[i]; -1 if none
  };

  /// Enclosing triangle sized from the given bounding box.
  DelaunayTriangulation(Point lower, Point upper);

  /// Inserts p and restores the Delaunay property.  Returns the new vertex
  /// id, or the existing id when p coincides with a vertex.
  int insert(Point p);

  bool is_enclosing_vertex(int v) const { return v < 3; }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  Point point(int v) const { return points_[static_cast<std::size_t>(v)]; }

  /// Triangle containing edge a->b (a, b in counterclockwise order in it),
  /// or -1 when the edge is absent.
  int find_directed_edge(int a, int b) const;
  /// Triangles incident to vertex v (the full fan).
  std::vector<int> incident_triangles(int v) const;
  /// Vertices adjacent to v.
  std::vector<int> neighbors(int v) const;
  /// Triangles created or modified by the most recent insert.
  const std::vector<int>& last_touched() const { return touched_; }

 private:
  struct Location {
    int triangle = -1;
    int edge = -1;    // >= 0 when the point lies on that edge
    int vertex = -1;  // >= 0 when the point coincides with a vertex
  };

  Location locate(Point p) const;
  void split_triangle(int t, int v);
  void split_edge(int t, int edge, int v);
  void legalize(int v, std::vector<std::pair<int, int>> stack);
  void set_neighbor(int t, int old_nbr, int new_nbr);
  int edge_index(int t, int a, int b) const;  // index of edge (a,b) in t, unordered
  void touch(int t);

  std::vector<Point> points_;
  std::vector<Triangle> triangles_;
  std::vector<int> vertex_triangle_;
  std::vector<int> touched_;
  int last_triangle_ = 0;
};

}  // namespace specobs::mesh
