#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specobs/geometry.hpp"

namespace specobs::mesh {

using geometry::Point;

enum class BoundaryTag : std::uint8_t { Outer, Obstacle };

/// Directed boundary edge; the meshed region lies to its left.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::Outer;
};

/// Polygonal boundaries of Omega(x): the outer loop counterclockwise and the
/// obstacle loop clockwise (empty when there is no obstacle), with the circles they sample (when circular) so
/// refinement can place new boundary vertices on the true curve.
struct BoundaryLoops {
  std::vector<Point> outer;
  std::vector<Point> obstacle;
  std::optional<geometry::Disk> outer_circle;
  geometry::Disk obstacle_circle;
};

struct Mesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<BoundaryEdge> boundary_edges;   // outer loop first, then obstacle loop
  double h = 0.0;
  double grading = 1.0;
  /// Geometry the mesh discretizes, when built from an ObstacleDomain.
  std::optional<geometry::ObstacleDomain> domain;
  /// Outer domain, set by both mesh_domain overloads.
  std::optional<geometry::ConvexDomain> outer;

  std::size_t outer_edge_count() const;
  std::size_t obstacle_edge_count() const;
  double area() const;
  /// Per node: true when the node is on either boundary loop.
  std::vector<bool> boundary_nodes() const;
};

/// Samples the circles at arc spacing <= h (vertex counts rounded up to a
/// multiple of 4, one vertex on the +x axis) and subdivides polygon edges to
/// length <= h.  The obstacle circle uses spacing grading * h.
BoundaryLoops polygonize(const geometry::ObstacleDomain& domain, double h, double grading = 1.0);

/// Outer loop only (no obstacle): meshes of D itself.
BoundaryLoops polygonize(const geometry::ConvexDomain& outer, double h);

/// Conforming Delaunay refinement of the region between the loops: interior
/// edges <= h (grading * h within distance r of the obstacle), minimum angle
/// >= 20 degrees.  Interior points start from a hexagonal lattice anchored
/// at the obstacle center and rotated by lattice_angle.  Throws InvalidInput
/// for touching or crossing loops.
Mesh triangulate(const BoundaryLoops& loops, double h, double grading = 1.0,
                 double lattice_angle = 0.0);

/// polygonize + triangulate, recording the source domain in the mesh.
Mesh mesh_domain(const geometry::ObstacleDomain& domain, double h, double grading = 1.0,
                 double lattice_angle = 0.0);

/// Mesh of D without an obstacle (oracle comparisons on disks and squares).
Mesh mesh_domain(const geometry::ConvexDomain& outer, double h);

/// Moves the obstacle rigidly by eps * v with a smooth cutoff that keeps the
/// outer boundary fixed; connectivity is unchanged.
Mesh translate_obstacle(const Mesh& mesh, Point v, double eps);

struct MeshQuality {
  double min_angle_deg = 0.0;
  double max_edge = 0.0;
  double min_signed_area = 0.0;
  bool loops_closed = false;
  bool conforming = false;
  int euler_characteristic = 0;  // V - E + F with F counting triangles; 1 - holes
};

MeshQuality check_mesh(const Mesh& mesh);

/// Node, triangle and boundary-edge CSV files ("<stem>_nodes.csv", ...).
void write_mesh_csv(const Mesh& mesh, const std::string& stem, const std::string& header_line);

}  // namespace specobs::mesh
