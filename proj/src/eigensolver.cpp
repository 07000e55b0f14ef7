#include "specobs/eigensolver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "specobs/errors.hpp"
#include "specobs/format.hpp"
#include "specobs/hash.hpp"

namespace specobs::fem {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

struct Assembly {
  SpMat K;  // interior x interior
  SpMat M;
  std::vector<int> interior_index;  // per node, -1 on the boundary
  std::vector<int> interior_nodes;
  // Rows of the full matrices for obstacle nodes, interior columns.
  SpMat K_obstacle;
  SpMat M_obstacle;
  std::vector<int> obstacle_row;  // per node, -1 unless on the obstacle loop
};

Assembly assemble(const mesh::Mesh& mesh) {
  Assembly a;
  const std::size_t nn = mesh.nodes.size();
  const std::vector<bool> on_boundary = mesh.boundary_nodes();
  a.interior_index.assign(nn, -1);
  a.obstacle_row.assign(nn, -1);
  for (std::size_t i = 0; i < nn; ++i) {
    if (!on_boundary[i]) {
      a.interior_index[i] = static_cast<int>(a.interior_nodes.size());
      a.interior_nodes.push_back(static_cast<int>(i));
    }
  }
  int obstacle_count = 0;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag == mesh::BoundaryTag::Obstacle) {
      a.obstacle_row[static_cast<std::size_t>(e.a)] = obstacle_count++;
    }
  }
  const int n = static_cast<int>(a.interior_nodes.size());
  if (n < 3) throw InvalidInput("mesh has fewer than 3 interior nodes");

  Triplets k_ii;
  Triplets m_ii;
  Triplets k_bi;
  Triplets m_bi;
  k_ii.reserve(mesh.triangles.size() * 9);
  m_ii.reserve(mesh.triangles.size() * 9);
  for (const auto& t : mesh.triangles) {
    const Point p[3] = {mesh.nodes[static_cast<std::size_t>(t[0])],
                        mesh.nodes[static_cast<std::size_t>(t[1])],
                        mesh.nodes[static_cast<std::size_t>(t[2])]};
    const double area2 = geometry::cross(p[1] - p[0], p[2] - p[0]);
    if (!(area2 > 0.0)) throw InvalidInput("mesh triangle with nonpositive area");
    Point grad[3];
    for (int i = 0; i < 3; ++i) {
      const Point e = p[(i + 2) % 3] - p[(i + 1) % 3];
      grad[i] = {-e.y / area2, e.x / area2};
    }
    const double area = 0.5 * area2;
    for (int i = 0; i < 3; ++i) {
      const auto ni = static_cast<std::size_t>(t[static_cast<std::size_t>(i)]);
      for (int j = 0; j < 3; ++j) {
        const auto nj = static_cast<std::size_t>(t[static_cast<std::size_t>(j)]);
        const int cj = a.interior_index[nj];
        if (cj < 0) continue;
        const double kij = area * geometry::dot(grad[i], grad[j]);
        const double mij = area / 12.0 * (i == j ? 2.0 : 1.0);
        if (const int ci = a.interior_index[ni]; ci >= 0) {
          k_ii.emplace_back(ci, cj, kij);
          m_ii.emplace_back(ci, cj, mij);
        } else if (const int bi = a.obstacle_row[ni]; bi >= 0) {
          k_bi.emplace_back(bi, cj, kij);
          m_bi.emplace_back(bi, cj, mij);
        }
      }
    }
  }
  a.K.resize(n, n);
  a.M.resize(n, n);
  a.K.setFromTriplets(k_ii.begin(), k_ii.end());
  a.M.setFromTriplets(m_ii.begin(), m_ii.end());
  a.K_obstacle.resize(obstacle_count, n);
  a.M_obstacle.resize(obstacle_count, n);
  a.K_obstacle.setFromTriplets(k_bi.begin(), k_bi.end());
  a.M_obstacle.setFromTriplets(m_bi.begin(), m_bi.end());
  return a;
}

double m_norm(const SpMat& M, const Vec& v) { return std::sqrt(std::max(0.0, v.dot(M * v))); }

/// M-orthonormalizes the columns of W against `basis` (already M-orthonormal)
/// and among themselves: W = V R with R upper triangular.  Columns that
/// vanish numerically are replaced by random directions (with zero R entry).
Mat orthonormalize_block(Mat& W, const Eigen::Ref<const Mat>& basis, const SpMat& M,
                         std::mt19937_64& rng) {
  const Eigen::Index b = W.cols();
  Mat R = Mat::Zero(b, b);
  std::normal_distribution<double> normal;
  for (Eigen::Index c = 0; c < b; ++c) {
    Vec w = W.col(c);
    const double original = m_norm(M, w);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index d = 0; d < c; ++d) {
        const double coef = W.col(d).dot(M * w);
        w -= coef * W.col(d);
        R(d, c) += coef;
      }
    }
    double nrm = m_norm(M, w);
    if (!(nrm > 1e-10 * original) || nrm == 0.0) {
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
      for (int pass = 0; pass < 2; ++pass) {
        if (basis.cols() > 0) w -= basis * (basis.transpose() * (M * w));
        for (Eigen::Index d = 0; d < c; ++d) w -= W.col(d).dot(M * w) * W.col(d);
      }
      nrm = m_norm(M, w);
      R(c, c) = 0.0;
    } else {
      R(c, c) = nrm;
    }
    W.col(c) = w / nrm;
  }
  return R;
}

struct EigenResult {
  Vec values;  // ascending lambda
  Mat vectors;
  Vec residuals;  // relative
  int restarts = 0;
  int applications = 0;
};

/// Thick-restart block Lanczos on K^{-1} M in the M inner product.
EigenResult block_lanczos(const SpMat& K, const SpMat& M, int N, const SolverOptions& opt) {
  const Eigen::Index n = K.rows();
  const int b = std::max(1, opt.block_size);
  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw NumericalFailure("stiffness factorization failed");

  const Eigen::Index cap = std::min<Eigen::Index>(
      n - b, std::max<Eigen::Index>(2 * N + 4 * b, N + 12 * b));
  const Eigen::Index keep = std::min<Eigen::Index>(N + b, cap - b);
  if (keep < N || cap < N + b) throw InvalidInput("eigencount too large for the mesh");

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Mat Q(n, cap + b);
  Mat H = Mat::Zero(cap + b, cap + b);
  {
    Mat W(n, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) W(i, j) = normal(rng);
    }
    orthonormalize_block(W, Q.leftCols(0), M, rng);
    Q.leftCols(b) = W;
  }
  Eigen::Index active = 0;
  EigenResult out;
  Eigen::SelfAdjointEigenSolver<Mat> eig;
  Vec residual;
  while (true) {
    while (active + b <= cap) {
      const Eigen::Index m_all = active + b;
      Mat W = ldlt.solve(M * Q.middleCols(active, b));
      out.applications += b;
      for (int pass = 0; pass < 2; ++pass) {
        const Mat C = Q.leftCols(m_all).transpose() * (M * W);
        W.noalias() -= Q.leftCols(m_all) * C;
        H.block(0, active, m_all, b) += C;
      }
      const Mat R = orthonormalize_block(W, Q.leftCols(m_all), M, rng);
      Q.middleCols(m_all, b) = W;
      H.block(m_all, active, b, b) = R;
      active = m_all;
    }
    const Mat T = 0.5 * (H.topLeftCorner(active, active) +
                         H.topLeftCorner(active, active).transpose());
    eig.compute(T);
    if (eig.info() != Eigen::Success) throw NumericalFailure("projected eigenproblem failed");
    const Mat coupling = H.block(active, 0, b, active);
    // Largest mu first.
    residual.resize(active);
    bool converged = true;
    for (Eigen::Index i = 0; i < active; ++i) {
      const Eigen::Index col = active - 1 - i;
      const double mu = eig.eigenvalues()(col);
      residual(i) = (coupling * eig.eigenvectors().col(col)).norm() / std::abs(mu);
      if (i < N && !(mu > 0.0 && residual(i) <= opt.tol)) converged = false;
    }
    if (converged) break;
    if (out.restarts >= opt.max_restarts) {
      throw NumericalFailure("eigensolver did not converge within " +
                             std::to_string(opt.max_restarts) + " restarts");
    }
    ++out.restarts;
    const Mat Y = eig.eigenvectors().rightCols(keep).rowwise().reverse();
    const Vec mu = eig.eigenvalues().tail(keep).reverse();
    const Mat kept = Q.leftCols(active) * Y;
    const Mat pending = Q.middleCols(active, b);
    const Mat S = coupling * Y;
    H.setZero();
    H.topLeftCorner(keep, keep) = mu.asDiagonal();
    H.block(keep, 0, b, keep) = S;
    Q.leftCols(keep) = kept;
    Q.middleCols(keep, b) = pending;
    active = keep;
  }
  const Mat Y = eig.eigenvectors().rightCols(N).rowwise().reverse();
  out.vectors = Q.leftCols(active) * Y;
  out.values.resize(N);
  out.residuals = residual.head(N);
  for (int i = 0; i < N; ++i) out.values(i) = 1.0 / eig.eigenvalues()(active - 1 - i);
  return out;
}

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

BoundaryData boundary_data(const mesh::Mesh& mesh, const Assembly& a, const Spectrum& s,
                           const Mat& vectors, FluxMethod method) {
  BoundaryData bd;
  std::vector<const mesh::BoundaryEdge*> edges;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag == mesh::BoundaryTag::Obstacle) edges.push_back(&e);
  }
  for (const auto* e : edges) {
    const Point pa = mesh.nodes[static_cast<std::size_t>(e->a)];
    const Point pb = mesh.nodes[static_cast<std::size_t>(e->b)];
    const Point d = pb - pa;
    const double len = geometry::norm(d);
    bd.midpoints.push_back(0.5 * (pa + pb));
    bd.normals.push_back({-d.y / len, d.x / len});
    bd.lengths.push_back(len);
  }
  const auto count = static_cast<Eigen::Index>(s.size());
  bd.normal_derivative.assign(static_cast<std::size_t>(count),
                              std::vector<double>(edges.size(), 0.0));
  if (method == FluxMethod::TriangleGradient) {
    std::unordered_map<std::uint64_t, int> owner;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      for (int k = 0; k < 3; ++k) {
        owner[edge_key(tri[static_cast<std::size_t>(k)], tri[static_cast<std::size_t>((k + 1) % 3)])] =
            static_cast<int>(t);
      }
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto it = owner.find(edge_key(edges[e]->a, edges[e]->b));
      if (it == owner.end()) throw NumericalFailure("obstacle edge without an owning triangle");
      const auto& tri = mesh.triangles[static_cast<std::size_t>(it->second)];
      const Point p[3] = {mesh.nodes[static_cast<std::size_t>(tri[0])],
                          mesh.nodes[static_cast<std::size_t>(tri[1])],
                          mesh.nodes[static_cast<std::size_t>(tri[2])]};
      const double area2 = geometry::cross(p[1] - p[0], p[2] - p[0]);
      for (int i = 0; i < 3; ++i) {
        const int ci = a.interior_index[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
        if (ci < 0) continue;
        const Point g0 = p[(i + 2) % 3] - p[(i + 1) % 3];
        const double dn = geometry::dot(Point{-g0.y / area2, g0.x / area2}, bd.normals[e]);
        for (Eigen::Index k = 0; k < count; ++k) {
          bd.normal_derivative[static_cast<std::size_t>(k)][e] += vectors(ci, k) * dn;
        }
      }
    }
  } else {
    // Boundary mass matrix on the obstacle loop (cyclic), then nodal flux
    // g = M_b^{-1} (K u - lambda M u) restricted to obstacle rows.
    const auto nb = static_cast<Eigen::Index>(edges.size());
    Triplets mb;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const int i = a.obstacle_row[static_cast<std::size_t>(edges[e]->a)];
      const int j = a.obstacle_row[static_cast<std::size_t>(edges[e]->b)];
      const double len = bd.lengths[e];
      mb.emplace_back(i, i, len / 3.0);
      mb.emplace_back(j, j, len / 3.0);
      mb.emplace_back(i, j, len / 6.0);
      mb.emplace_back(j, i, len / 6.0);
    }
    SpMat Mb(nb, nb);
    Mb.setFromTriplets(mb.begin(), mb.end());
    Eigen::SimplicialLDLT<SpMat> solver(Mb);
    if (solver.info() != Eigen::Success) throw NumericalFailure("boundary mass factorization failed");
    Mat F = a.K_obstacle * vectors;
    const Mat MU = a.M_obstacle * vectors;
    for (Eigen::Index k = 0; k < count; ++k) {
      F.col(k) -= s.eigenvalues[static_cast<std::size_t>(k)] * MU.col(k);
    }
    const Mat G = solver.solve(F);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const int i = a.obstacle_row[static_cast<std::size_t>(edges[e]->a)];
      const int j = a.obstacle_row[static_cast<std::size_t>(edges[e]->b)];
      for (Eigen::Index k = 0; k < count; ++k) {
        // The residual gives the outward (into the obstacle) flux.
        bd.normal_derivative[static_cast<std::size_t>(k)][e] = -0.5 * (G(i, k) + G(j, k));
      }
    }
  }
  return bd;
}

std::string center_literal(Point c) {
  auto round12 = [](double v) {
    const double r = std::round(v * 1e12) / 1e12;
    return r == 0.0 ? 0.0 : r;
  };
  return "(" + format_number(round12(c.x)) + "," + format_number(round12(c.y)) + ")";
}

}  // namespace

std::string family_key(const geometry::ObstacleDomain& domain, double h, double grading, int N,
                       double tol) {
  return "D=" + domain.outer.literal() + ";r=" + format_number(domain.radius) +
         ";h=" + format_number(h) + ";grading=" + format_number(grading) +
         ";N=" + std::to_string(N) + ";tol=" + format_number(tol) + ";version=" + kCodeVersion;
}

std::string domain_key(const geometry::ObstacleDomain& domain) {
  return "D=" + domain.outer.literal() + ";x=" + center_literal(domain.center) +
         ";r=" + format_number(domain.radius);
}

Spectrum assemble_and_solve(const mesh::Mesh& mesh, int N, const SolverOptions& options,
                            SolveStats* stats) {
  if (N < 1) throw InvalidInput("eigencount N must be at least 1");
  if (!(options.tol > 0.0)) throw InvalidInput("solver tolerance must be positive");
  const Assembly a = assemble(mesh);
  const auto n = static_cast<int>(a.interior_nodes.size());
  if (2 * N >= n) {
    throw InvalidInput("eigencount N = " + std::to_string(N) +
                       " must be below half the interior node count (" + std::to_string(n) + ")");
  }
  EigenResult r = block_lanczos(a.K, a.M, N, options);

  // Ascending order, deterministic sign, exact M-normalization.
  std::vector<int> order(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return r.values(i) < r.values(j); });
  Spectrum s;
  s.dimension = 2;
  s.measure = mesh.area();
  s.h = mesh.h;
  Mat X(r.vectors.rows(), N);
  std::vector<double> normalization(static_cast<std::size_t>(N));
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const int src = order[static_cast<std::size_t>(i)];
    Vec x = r.vectors.col(src);
    Eigen::Index arg = 0;
    x.cwiseAbs().maxCoeff(&arg);
    if (x(arg) < 0.0) x = -x;
    x /= m_norm(a.M, x);
    normalization[static_cast<std::size_t>(i)] = std::abs(x.dot(a.M * x) - 1.0);
    const double lambda = r.values(src);
    const Vec Mx = a.M * x;
    const double rel = (a.K * x - lambda * Mx).norm() / (lambda * Mx.norm());
    worst = std::max(worst, rel);
    s.eigenvalues.push_back(lambda);
    s.errors.push_back(lambda * std::max(rel, r.residuals(src)));
    X.col(i) = x;
  }
  if (stats) {
    stats->restarts = r.restarts;
    stats->operator_applications = r.applications;
    stats->max_relative_residual = worst;
  }
  if (mesh.domain) {
    s.family_key = family_key(*mesh.domain, mesh.h, mesh.grading, N, options.tol);
    s.domain_key = domain_key(*mesh.domain);
  } else if (mesh.outer) {
    s.domain_key = "D=" + mesh.outer->literal() + ";no obstacle";
    s.family_key = s.domain_key + ";h=" + format_number(mesh.h) + ";N=" + std::to_string(N) +
                   ";tol=" + format_number(options.tol) + ";version=" + kCodeVersion;
  }
  // The node coordinates (with the connectivity they imply) pin down the
  // discretization, including lattice rotation and obstacle deformation.
  std::string nodes;
  for (const Point& p : mesh.nodes) nodes += format_exact(p.x) + "," + format_exact(p.y) + ";";
  const std::string mesh_hash = sha256_hex(nodes);
  if (!mesh.domain && !mesh.outer) {
    s.domain_key = "mesh:" + mesh_hash;
    s.family_key = s.domain_key + ";N=" + std::to_string(N) + ";tol=" + format_number(options.tol);
  }
  s.fingerprint = sha256_hex(s.family_key + "|" + s.domain_key + "|" + mesh_hash);
  if (options.boundary_data && mesh.obstacle_edge_count() > 0) {
    s.boundary = boundary_data(mesh, a, s, X, options.flux);
    s.boundary->normalization_error = normalization;
  }
  return s;
}

Spectrum richardson_extrapolate(const Spectrum& coarse, const Spectrum& fine) {
  if (coarse.domain_key != fine.domain_key) {
    throw InvalidInput("Richardson extrapolation needs spectra of the same domain");
  }
  if (coarse.size() != fine.size()) {
    throw InvalidInput("Richardson extrapolation needs equal eigenvalue counts");
  }
  if (!(coarse.h > 0.0 && fine.h > 0.0)) throw InvalidInput("Richardson needs mesh sizes");
  Spectrum out = fine;
  out.boundary.reset();
  const bool identical = coarse.eigenvalues == fine.eigenvalues;
  const double rho = coarse.h / fine.h;
  if (!identical && !(rho > 1.0)) throw InvalidInput("coarse mesh size must exceed the fine one");
  std::vector<std::pair<double, double>> merged;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const double shift =
        identical ? 0.0 : (fine.eigenvalues[i] - coarse.eigenvalues[i]) / (rho * rho - 1.0);
    merged.emplace_back(fine.eigenvalues[i] + shift, std::abs(shift));
  }
  std::sort(merged.begin(), merged.end());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    out.eigenvalues[i] = merged[i].first;
    out.errors[i] = merged[i].second;
  }
  out.h = 0.0;
  out.family_key = fine.family_key + ";richardson=" + format_number(coarse.h);
  out.fingerprint = sha256_hex(coarse.fingerprint + fine.fingerprint);
  return out;
}

std::vector<NormalDerivativeSample> obstacle_normal_derivatives(const Spectrum& spectrum, int k) {
  if (!spectrum.boundary) throw InvalidInput("spectrum carries no obstacle boundary data");
  if (k < 1 || k > static_cast<int>(spectrum.boundary->normal_derivative.size())) {
    throw InvalidInput("eigenfunction index out of range");
  }
  const auto& bd = *spectrum.boundary;
  std::vector<NormalDerivativeSample> out;
  const auto& d = bd.normal_derivative[static_cast<std::size_t>(k - 1)];
  for (std::size_t e = 0; e < d.size(); ++e) out.push_back({bd.midpoints[e], d[e] * d[e]});
  return out;
}

}  // namespace specobs::fem
