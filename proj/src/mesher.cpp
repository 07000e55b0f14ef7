#include "specobs/mesher.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

#include "specobs/delaunay.hpp"
#include "specobs/errors.hpp"
#include "specobs/format.hpp"

namespace specobs::mesh {

using geometry::cross;
using geometry::distance;
using geometry::dot;
using geometry::norm;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinAngleDeg = 20.5;
// Lattice points keep this multiple of the local size away from boundaries so
// that no boundary segment starts out encroached.
constexpr double kBoundaryOffset = 0.6;
// Lattice spacing relative to the local size.
constexpr double kLatticeScale = 0.9;

int circle_vertex_count(double radius, double spacing) {
  const int n = static_cast<int>(std::ceil(2.0 * kPi * radius / spacing - 1e-9));
  return std::max(4, (n + 3) / 4 * 4);
}

std::vector<Point> sample_circle(const geometry::Disk& disk, int n, bool clockwise) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double theta = (clockwise ? -2.0 : 2.0) * kPi * k / n;
    pts.push_back(disk.center + disk.radius * geometry::direction(theta));
  }
  return pts;
}

/// Convex loop with O(log n) point-in-polygon queries via angular sectors
/// about an interior reference point.
class ConvexLoopIndex {
 public:
  explicit ConvexLoopIndex(std::vector<Point> ccw) : pts_(std::move(ccw)) {
    for (const Point& p : pts_) ref_ = ref_ + p;
    ref_ = (1.0 / static_cast<double>(pts_.size())) * ref_;
    const std::size_t n = pts_.size();
    std::size_t start = 0;
    angles_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      angles_[i] = std::atan2(pts_[i].y - ref_.y, pts_[i].x - ref_.x);
      if (angles_[i] < angles_[start]) start = i;
    }
    std::rotate(pts_.begin(), pts_.begin() + static_cast<std::ptrdiff_t>(start), pts_.end());
    std::rotate(angles_.begin(), angles_.begin() + static_cast<std::ptrdiff_t>(start),
                angles_.end());
  }

  /// Signed orientation of p against the edge of its angular sector:
  /// positive strictly inside.
  double side(Point p) const {
    const double a = std::atan2(p.y - ref_.y, p.x - ref_.x);
    const std::size_t n = pts_.size();
    auto it = std::upper_bound(angles_.begin(), angles_.end(), a);
    std::size_t hi = static_cast<std::size_t>(it - angles_.begin());
    const std::size_t i = (hi + n - 1) % n;
    const std::size_t j = (i + 1) % n;
    return cross(pts_[j] - pts_[i], p - pts_[i]);
  }

  bool inside(Point p) const { return side(p) > 0.0; }

 private:
  std::vector<Point> pts_;
  std::vector<double> angles_;
  Point ref_;
};

double signed_distance_to_loop(const std::vector<Point>& ccw, Point p) {
  const std::size_t n = ccw.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = ccw[i];
    const Point b = ccw[(i + 1) % n];
    const Point e = b - a;
    const double len2 = dot(e, e);
    const double w = std::clamp(dot(p - a, e) / len2, 0.0, 1.0);
    best = std::min(best, distance(p, a + w * e));
  }
  // Convex loop: inside iff left of every edge.
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(ccw[(i + 1) % n] - ccw[i], p - ccw[i]) < 0.0) return -best;
  }
  return best;
}

double triangle_min_angle_deg(Point a, Point b, Point c) {
  const double la = distance(b, c);
  const double lb = distance(a, c);
  const double lc = distance(a, b);
  auto angle = [](double opp, double s1, double s2) {
    const double cosv = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
    return std::acos(cosv) * 180.0 / kPi;
  };
  return std::min({angle(la, lb, lc), angle(lb, la, lc), angle(lc, la, lb)});
}

double triangle_max_edge(Point a, Point b, Point c) {
  return std::max({distance(a, b), distance(b, c), distance(c, a)});
}

class Refiner {
 public:
  Refiner(const BoundaryLoops& loops, double h, double grading, double lattice_angle)
      : loops_(loops),
        h_(h),
        lattice_angle_(lattice_angle),
        grading_(loops.obstacle.empty() ? 1.0 : grading),
        dt_(lower_corner(loops), upper_corner(loops)),
        loop_count_(loops.obstacle.empty() ? 1 : 2) {}

  Mesh run() {
    insert_loops();
    insert_lattice();
    for (int v : loop_vertices()) segment_queue_.push_back(v);
    for (int t = 0; t < static_cast<int>(dt_.triangles().size()); ++t) push_triangle(t);
    const std::size_t cap = 20 * dt_.points().size() + 200000;
    while (true) {
      fix_segments();
      if (triangle_queue_.empty()) break;
      const auto [t, snapshot] = triangle_queue_.front();
      triangle_queue_.pop_front();
      if (dt_.triangles()[static_cast<std::size_t>(t)].v != snapshot) continue;
      refine_triangle(t);
      if (dt_.points().size() > cap) {
        throw NumericalFailure("mesh refinement did not terminate");
      }
    }
    return extract();
  }

 private:
  static Point lower_corner(const BoundaryLoops& loops) {
    Point lo = loops.outer.front();
    for (const Point& p : loops.outer) lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    return lo;
  }
  static Point upper_corner(const BoundaryLoops& loops) {
    Point hi = loops.outer.front();
    for (const Point& p : loops.outer) hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    return hi;
  }

  double obstacle_gap(Point p) const {
    if (loop_count_ == 1) return std::numeric_limits<double>::infinity();
    return distance(p, loops_.obstacle_circle.center) - loops_.obstacle_circle.radius;
  }

  double local_size(Point p) const {
    return obstacle_gap(p) < loops_.obstacle_circle.radius ? grading_ * h_ : h_;
  }

  void ensure_vertex_arrays() {
    const std::size_t n = dt_.points().size();
    if (next_.size() < n) {
      next_.resize(n, -1);
      prev_.resize(n, -1);
      loop_.resize(n, -1);
    }
  }

  void insert_loops() {
    const std::vector<Point>* src[2] = {&loops_.outer, &loops_.obstacle};
    for (int l = 0; l < loop_count_; ++l) {
      std::vector<int> ids;
      for (const Point& p : *src[l]) {
        const int id = dt_.insert(p);
        ensure_vertex_arrays();
        if (loop_[static_cast<std::size_t>(id)] >= 0) {
          throw InvalidInput("boundary loops share a vertex");
        }
        ids.push_back(id);
      }
      const std::size_t n = ids.size();
      for (std::size_t i = 0; i < n; ++i) {
        const int v = ids[i];
        next_[static_cast<std::size_t>(v)] = ids[(i + 1) % n];
        prev_[static_cast<std::size_t>(v)] = ids[(i + n - 1) % n];
        loop_[static_cast<std::size_t>(v)] = l;
      }
      loop_start_[l] = ids.front();
    }
    rebuild_loop_index();
  }

  void insert_lattice() {
    const Point lo = lower_corner(loops_);
    const Point hi = upper_corner(loops_);
    const double r = loop_count_ == 2 ? loops_.obstacle_circle.radius : 0.0;
    const bool graded = grading_ < 1.0;
    // Anchored at the obstacle center so that the mesh around the obstacle
    // is the same up to translation for every obstacle position.
    const Point o = loop_count_ == 2 ? loops_.obstacle_circle.center : Point{0.0, 0.0};
    double extent = 0.0;
    for (const Point& c : {lo, hi, Point{lo.x, hi.y}, Point{hi.x, lo.y}}) {
      extent = std::max(extent, distance(c, o));
    }
    auto emit = [&](double spacing, auto&& keep) {
      const double dy = spacing * std::sqrt(3.0) / 2.0;
      const int jmax = static_cast<int>(std::ceil(extent / dy)) + 1;
      const int imax = static_cast<int>(std::ceil(extent / spacing)) + jmax + 1;
      for (int j = -jmax; j <= jmax; ++j) {
        for (int i = -imax; i <= imax; ++i) {
          const Point q{i * spacing + 0.5 * spacing * j, j * dy};
          if (std::abs(q.x) > extent + spacing) continue;
          const Point p = o + geometry::rotate(q, lattice_angle_);
          if (p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y) continue;
          if (keep(p)) {
            dt_.insert(p);
            ensure_vertex_arrays();
          }
        }
      }
    };
    emit(kLatticeScale * h_, [&](Point p) {
      const double gap = obstacle_gap(p);
      if (graded ? gap < r : gap < kBoundaryOffset * h_) return false;
      return signed_distance_to_loop(loops_.outer, p) >= kBoundaryOffset * h_;
    });
    if (graded) {
      const double fine = grading_ * h_;
      emit(kLatticeScale * fine, [&](Point p) {
        const double gap = obstacle_gap(p);
        if (gap < kBoundaryOffset * fine || gap >= r - 0.5 * fine) return false;
        return signed_distance_to_loop(loops_.outer, p) >= kBoundaryOffset * h_;
      });
    }
  }

  std::vector<int> loop_vertices() const {
    std::vector<int> out;
    for (int l = 0; l < loop_count_; ++l) {
      int v = loop_start_[l];
      do {
        out.push_back(v);
        v = next_[static_cast<std::size_t>(v)];
      } while (v != loop_start_[l]);
    }
    return out;
  }

  std::vector<Point> loop_points(int l) const {
    std::vector<Point> pts;
    int v = loop_start_[l];
    do {
      pts.push_back(dt_.point(v));
      v = next_[static_cast<std::size_t>(v)];
    } while (v != loop_start_[l]);
    return pts;
  }

  void rebuild_loop_index() {
    outer_index_.emplace(loop_points(0));
    loops_dirty_ = false;
    if (loop_count_ == 1) return;
    std::vector<Point> obstacle = loop_points(1);
    std::reverse(obstacle.begin(), obstacle.end());
    obstacle_index_.emplace(std::move(obstacle));
    loops_dirty_ = false;
  }

  bool in_domain(Point p) {
    if (loops_dirty_) rebuild_loop_index();
    if (!outer_index_->inside(p)) return false;
    return loop_count_ == 1 || obstacle_index_->side(p) < 0.0;
  }

  bool triangle_in_domain(int t) {
    const auto& v = dt_.triangles()[static_cast<std::size_t>(t)].v;
    for (int w : v) {
      if (dt_.is_enclosing_vertex(w)) return false;
    }
    const Point c = (1.0 / 3.0) * (dt_.point(v[0]) + dt_.point(v[1]) + dt_.point(v[2]));
    return in_domain(c);
  }

  void push_triangle(int t) {
    triangle_queue_.emplace_back(t, dt_.triangles()[static_cast<std::size_t>(t)].v);
  }

  void after_insert(int v) {
    for (int t : dt_.last_touched()) push_triangle(t);
    for (int q : dt_.neighbors(v)) {
      if (q < static_cast<int>(loop_.size()) && loop_[static_cast<std::size_t>(q)] >= 0) {
        segment_queue_.push_back(q);
        segment_queue_.push_back(prev_[static_cast<std::size_t>(q)]);
      }
    }
  }

  bool encroaches(Point p, int v) const {
    const Point a = dt_.point(v);
    const Point b = dt_.point(next_[static_cast<std::size_t>(v)]);
    return dot(a - p, b - p) < 0.0;
  }

  bool segment_needs_split(int v) const {
    const int w = next_[static_cast<std::size_t>(v)];
    const int t = dt_.find_directed_edge(v, w);
    if (t < 0) return true;
    const auto& tri = dt_.triangles()[static_cast<std::size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      if (tri.v[k] != v && tri.v[k] != w && encroaches(dt_.point(tri.v[k]), v)) return true;
    }
    for (int k = 0; k < 3; ++k) {
      const int n = tri.nbr[k];
      if (tri.v[k] == v || tri.v[k] == w || n < 0) continue;
      for (int apex : dt_.triangles()[static_cast<std::size_t>(n)].v) {
        if (apex != v && apex != w && !dt_.is_enclosing_vertex(apex) &&
            encroaches(dt_.point(apex), v)) {
          return true;
        }
      }
    }
    return false;
  }

  void split_segment(int v) {
    const int w = next_[static_cast<std::size_t>(v)];
    const int l = loop_[static_cast<std::size_t>(v)];
    Point m = 0.5 * (dt_.point(v) + dt_.point(w));
    const geometry::Disk* circle = nullptr;
    if (l == 0 && loops_.outer_circle) circle = &*loops_.outer_circle;
    if (l == 1) circle = &loops_.obstacle_circle;
    if (circle) {
      const Point d = m - circle->center;
      m = circle->center + (circle->radius / norm(d)) * d;
    }
    const int id = dt_.insert(m);
    ensure_vertex_arrays();
    if (loop_[static_cast<std::size_t>(id)] >= 0 || id == v || id == w) {
      throw NumericalFailure("boundary segment split produced a duplicate vertex");
    }
    next_[static_cast<std::size_t>(v)] = id;
    prev_[static_cast<std::size_t>(id)] = v;
    next_[static_cast<std::size_t>(id)] = w;
    prev_[static_cast<std::size_t>(w)] = id;
    loop_[static_cast<std::size_t>(id)] = l;
    loops_dirty_ = true;
    segment_queue_.push_back(v);
    segment_queue_.push_back(id);
    after_insert(id);
  }

  void fix_segments() {
    while (!segment_queue_.empty()) {
      const int v = segment_queue_.front();
      segment_queue_.pop_front();
      if (segment_needs_split(v)) split_segment(v);
    }
  }

  void refine_triangle(int t) {
    if (!triangle_in_domain(t)) return;
    const auto v = dt_.triangles()[static_cast<std::size_t>(t)].v;
    const Point a = dt_.point(v[0]);
    const Point b = dt_.point(v[1]);
    const Point c = dt_.point(v[2]);
    const double size =
        std::min({local_size(a), local_size(b), local_size(c)}) * (1.0 + 1e-9);
    const bool too_big = triangle_max_edge(a, b, c) > size;
    const bool skinny = triangle_min_angle_deg(a, b, c) < kMinAngleDeg;
    if (!too_big && !skinny) return;
    const Point cc = circumcenter(a, b, c);
    std::vector<int> encroached;
    for (int s : loop_vertices()) {
      if (encroaches(cc, s)) encroached.push_back(s);
    }
    if (encroached.empty() && !in_domain(cc)) {
      // Circumcenter outside the region without encroaching: split the
      // nearest boundary segment instead.
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int s : loop_vertices()) {
        const double d =
            distance(cc, 0.5 * (dt_.point(s) + dt_.point(next_[static_cast<std::size_t>(s)])));
        if (d < best_d) {
          best_d = d;
          best = s;
        }
      }
      encroached.push_back(best);
    }
    if (!encroached.empty()) {
      for (int s : encroached) split_segment(s);
      push_triangle(t);
      return;
    }
    const int id = dt_.insert(cc);
    ensure_vertex_arrays();
    after_insert(id);
  }

  Mesh extract() {
    const auto& tris = dt_.triangles();
    std::vector<int> keep;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      if (triangle_in_domain(t)) keep.push_back(t);
    }
    std::vector<int> used;
    for (int t : keep) {
      for (int w : tris[static_cast<std::size_t>(t)].v) used.push_back(w);
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::sort(used.begin(), used.end(), [&](int i, int j) {
      const Point p = dt_.point(i);
      const Point q = dt_.point(j);
      return std::tie(p.y, p.x, i) < std::tie(q.y, q.x, j);
    });
    std::vector<int> remap(dt_.points().size(), -1);
    Mesh mesh;
    mesh.h = h_;
    mesh.grading = grading_;
    for (std::size_t k = 0; k < used.size(); ++k) {
      remap[static_cast<std::size_t>(used[k])] = static_cast<int>(k);
      mesh.nodes.push_back(dt_.point(used[k]));
    }
    for (int t : keep) {
      const auto& v = tris[static_cast<std::size_t>(t)].v;
      mesh.triangles.push_back({remap[static_cast<std::size_t>(v[0])],
                                remap[static_cast<std::size_t>(v[1])],
                                remap[static_cast<std::size_t>(v[2])]});
    }
    for (int l = 0; l < loop_count_; ++l) {
      int v = loop_start_[l];
      do {
        const int w = next_[static_cast<std::size_t>(v)];
        mesh.boundary_edges.push_back({remap[static_cast<std::size_t>(v)],
                                       remap[static_cast<std::size_t>(w)],
                                       l == 0 ? BoundaryTag::Outer : BoundaryTag::Obstacle});
        v = w;
      } while (v != loop_start_[l]);
    }
    return mesh;
  }

  const BoundaryLoops& loops_;
  double h_;
  double lattice_angle_;
  double grading_;
  DelaunayTriangulation dt_;
  std::vector<int> next_;
  std::vector<int> prev_;
  std::vector<int> loop_;
  int loop_count_ = 2;
  int loop_start_[2] = {-1, -1};
  std::optional<ConvexLoopIndex> outer_index_;
  std::optional<ConvexLoopIndex> obstacle_index_;
  bool loops_dirty_ = true;
  std::deque<int> segment_queue_;
  std::deque<std::pair<int, std::array<int, 3>>> triangle_queue_;
};

void validate_loops(const BoundaryLoops& loops) {
  if (loops.outer.size() < 3 || (!loops.obstacle.empty() && loops.obstacle.size() < 3)) {
    throw InvalidInput("boundary loops need at least 3 vertices each");
  }
  if (!(geometry::polygon_area(loops.outer) > 0.0)) {
    throw InvalidInput("outer loop must be counterclockwise");
  }
  if (!loops.obstacle.empty() && !(geometry::polygon_area(loops.obstacle) < 0.0)) {
    throw InvalidInput("obstacle loop must be clockwise");
  }
  double scale = 0.0;
  for (const Point& p : loops.outer) scale = std::max(scale, norm(p));
  for (const Point& p : loops.obstacle) {
    if (!(signed_distance_to_loop(loops.outer, p) > 1e-9 * std::max(scale, 1.0))) {
      throw InvalidInput(
          "obstacle loop touches or crosses the outer loop (contact configurations are not "
          "meshed)");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t Mesh::outer_edge_count() const {
  return static_cast<std::size_t>(std::count_if(
      boundary_edges.begin(), boundary_edges.end(),
      [](const BoundaryEdge& e) { return e.tag == BoundaryTag::Outer; }));
}

std::size_t Mesh::obstacle_edge_count() const {
  return boundary_edges.size() - outer_edge_count();
}

double Mesh::area() const {
  double a = 0.0;
  for (const auto& t : triangles) {
    a += 0.5 * cross(nodes[static_cast<std::size_t>(t[1])] - nodes[static_cast<std::size_t>(t[0])],
                     nodes[static_cast<std::size_t>(t[2])] - nodes[static_cast<std::size_t>(t[0])]);
  }
  return a;
}

std::vector<bool> Mesh::boundary_nodes() const {
  std::vector<bool> on(nodes.size(), false);
  for (const auto& e : boundary_edges) {
    on[static_cast<std::size_t>(e.a)] = true;
    on[static_cast<std::size_t>(e.b)] = true;
  }
  return on;
}

BoundaryLoops polygonize(const geometry::ConvexDomain& outer, double h) {
  if (!(h > 0.0)) throw InvalidInput("mesh size h must be positive");
  BoundaryLoops loops;
  if (outer.is_disk()) {
    const geometry::Disk& d = outer.as_disk();
    loops.outer = sample_circle(d, circle_vertex_count(d.radius, h), false);
    loops.outer_circle = d;
  } else {
    const auto& v = outer.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point a = v[i];
      const Point b = v[(i + 1) % v.size()];
      const int m = std::max(1, static_cast<int>(std::ceil(distance(a, b) / h - 1e-9)));
      for (int j = 0; j < m; ++j) loops.outer.push_back(a + (static_cast<double>(j) / m) * (b - a));
    }
  }
  return loops;
}

BoundaryLoops polygonize(const geometry::ObstacleDomain& domain, double h, double grading) {
  if (!(h > 0.0)) throw InvalidInput("mesh size h must be positive");
  if (!(grading > 0.0 && grading <= 1.0)) throw InvalidInput("grading must lie in (0, 1]");
  if (!(h < domain.radius / 4.0)) {
    throw InvalidInput("mesh size h = " + format_number(h) +
                       " is too coarse for obstacle radius r = " + format_number(domain.radius) +
                       " (need h < r/4)");
  }
  BoundaryLoops loops = polygonize(domain.outer, h);
  loops.obstacle_circle = geometry::Disk{domain.center, domain.radius};
  loops.obstacle =
      sample_circle(loops.obstacle_circle, circle_vertex_count(domain.radius, grading * h), true);
  return loops;
}

Mesh triangulate(const BoundaryLoops& loops, double h, double grading, double lattice_angle) {
  if (!(h > 0.0)) throw InvalidInput("mesh size h must be positive");
  if (!(grading > 0.0 && grading <= 1.0)) throw InvalidInput("grading must lie in (0, 1]");
  validate_loops(loops);
  Refiner refiner(loops, h, grading, lattice_angle);
  return refiner.run();
}

Mesh mesh_domain(const geometry::ObstacleDomain& domain, double h, double grading,
                 double lattice_angle) {
  Mesh mesh = triangulate(polygonize(domain, h, grading), h, grading, lattice_angle);
  mesh.domain = domain;
  mesh.outer = domain.outer;
  return mesh;
}

Mesh mesh_domain(const geometry::ConvexDomain& outer, double h) {
  Mesh mesh = triangulate(polygonize(outer, h), h, 1.0);
  mesh.outer = outer;
  return mesh;
}

Mesh translate_obstacle(const Mesh& mesh, Point v, double eps) {
  if (!mesh.domain) throw InvalidInput("mesh has no source domain to deform");
  const auto& dom = *mesh.domain;
  const double r = dom.radius;
  const double reach = r + 0.9 * dom.clearance();
  if (std::abs(eps) * norm(v) >= 0.25 * dom.clearance()) {
    throw InvalidInput("obstacle displacement too large for the clearance");
  }
  Mesh moved = mesh;
  for (Point& p : moved.nodes) {
    const double rho = distance(p, dom.center);
    double weight = 1.0;
    if (rho > r * (1.0 + 1e-9)) {
      const double s = std::clamp((rho - r) / (reach - r), 0.0, 1.0);
      weight = 1.0 - s * s * (3.0 - 2.0 * s);
    }
    p = p + (eps * weight) * v;
  }
  moved.domain = geometry::ObstacleDomain::make(dom.outer, dom.center + eps * v, r);
  return moved;
}

MeshQuality check_mesh(const Mesh& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.min_signed_area = std::numeric_limits<double>::infinity();
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : mesh.triangles) {
    const Point a = mesh.nodes[static_cast<std::size_t>(t[0])];
    const Point b = mesh.nodes[static_cast<std::size_t>(t[1])];
    const Point c = mesh.nodes[static_cast<std::size_t>(t[2])];
    q.min_angle_deg = std::min(q.min_angle_deg, triangle_min_angle_deg(a, b, c));
    q.max_edge = std::max(q.max_edge, triangle_max_edge(a, b, c));
    q.min_signed_area = std::min(q.min_signed_area, 0.5 * cross(b - a, c - a));
    for (int k = 0; k < 3; ++k) ++directed[{t[k], t[(k + 1) % 3]}];
  }
  // Conformity: every directed edge appears once; an edge without its
  // reverse must be a listed boundary edge.
  bool conforming = true;
  std::size_t undirected = 0;
  std::size_t unmatched = 0;
  for (const auto& [e, count] : directed) {
    if (count != 1) conforming = false;
    const bool has_reverse = directed.count({e.second, e.first}) > 0;
    if (!has_reverse) {
      ++unmatched;
      ++undirected;
    } else if (e.first < e.second) {
      ++undirected;
    }
  }
  std::size_t boundary_hits = 0;
  for (const auto& e : mesh.boundary_edges) {
    auto it = directed.find({e.a, e.b});
    if (it != directed.end() && directed.count({e.b, e.a}) == 0) ++boundary_hits;
  }
  if (boundary_hits != mesh.boundary_edges.size() || unmatched != mesh.boundary_edges.size()) {
    conforming = false;
  }
  q.conforming = conforming;

  // Loops: each boundary node has one outgoing and one incoming edge, and the
  // edges form exactly two cycles.
  std::map<int, int> next;
  for (const auto& e : mesh.boundary_edges) {
    if (!next.emplace(e.a, e.b).second) conforming = false;
  }
  int cycles = 0;
  std::map<int, bool> seen;
  bool closed = true;
  for (const auto& [start, unused] : next) {
    if (seen[start]) continue;
    ++cycles;
    int v = start;
    std::size_t steps = 0;
    do {
      seen[v] = true;
      auto it = next.find(v);
      if (it == next.end()) {
        closed = false;
        break;
      }
      v = it->second;
      if (++steps > next.size()) {
        closed = false;
        break;
      }
    } while (v != start);
  }
  const int expected_cycles = mesh.obstacle_edge_count() > 0 ? 2 : 1;
  q.loops_closed = closed && cycles == expected_cycles;
  std::size_t used_nodes = 0;
  {
    std::vector<bool> used(mesh.nodes.size(), false);
    for (const auto& t : mesh.triangles) {
      for (int v : t) used[static_cast<std::size_t>(v)] = true;
    }
    used_nodes = static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
  }
  q.euler_characteristic = static_cast<int>(used_nodes) - static_cast<int>(undirected) +
                           static_cast<int>(mesh.triangles.size());
  return q;
}

void write_mesh_csv(const Mesh& mesh, const std::string& stem, const std::string& header_line) {
  {
    std::ofstream out(stem + "_nodes.csv");
    out << header_line << "\nindex,x,y\n";
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
      out << i << "," << format_exact(mesh.nodes[i].x) << "," << format_exact(mesh.nodes[i].y)
          << "\n";
    }
  }
  {
    std::ofstream out(stem + "_triangles.csv");
    out << header_line << "\nindex,a,b,c\n";
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
      const auto& t = mesh.triangles[i];
      out << i << "," << t[0] << "," << t[1] << "," << t[2] << "\n";
    }
  }
  {
    std::ofstream out(stem + "_edges.csv");
    out << header_line << "\nindex,a,b,tag\n";
    for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
      const auto& e = mesh.boundary_edges[i];
      out << i << "," << e.a << "," << e.b << ","
          << (e.tag == BoundaryTag::Outer ? "outer" : "obstacle") << "\n";
    }
  }
}

}  // namespace specobs::mesh
