#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specobs/mesher.hpp"
#include "specobs/spectrum.hpp"

namespace specobs::fem {

/// How du/dnu is recovered on obstacle edges.
enum class FluxMethod : std::uint8_t {
  /// Gradient of the P1 eigenfunction in the triangle owning the edge.
  TriangleGradient,
  /// Boundary flux from the discrete residual (K - lambda M) u at the
  /// boundary nodes, projected onto P1 traces with the boundary mass matrix.
  Consistent,
};

struct SolverOptions {
  double tol = 1e-9;        // relative residual
  int block_size = 8;
  int max_restarts = 500;
  std::uint64_t seed = 0x5eed5eedULL;
  bool boundary_data = true;
  FluxMethod flux = FluxMethod::Consistent;
};

struct SolveStats {
  int restarts = 0;
  int operator_applications = 0;
  double max_relative_residual = 0.0;
};

/// Lowest N eigenpairs of the P1 Dirichlet problem K u = lambda M u on the
/// mesh (consistent mass, boundary rows eliminated).  Boundary data is filled
/// when the mesh has obstacle edges and options.boundary_data is set.
Spectrum assemble_and_solve(const mesh::Mesh& mesh, int N, const SolverOptions& options = {},
                            SolveStats* stats = nullptr);

/// Identity strings for a mesh-based spectrum (see Spectrum).
std::string family_key(const geometry::ObstacleDomain& domain, double h, double grading, int N,
                       double tol);
std::string domain_key(const geometry::ObstacleDomain& domain);

/// lambda* = lambda_f + (lambda_f - lambda_c) / (rho^2 - 1), rho = h_c / h_f.
/// The per-eigenvalue error is |lambda* - lambda_f|.
Spectrum richardson_extrapolate(const Spectrum& coarse, const Spectrum& fine);

struct OracleSpec {
  enum class Kind : std::uint8_t { Interval, Rectangle, Disk, Annulus };
  Kind kind = Kind::Interval;
  double a = 1.0;  // L, side a, or R
  double b = 1.0;  // side b or inner radius r
  int N = 1;

  static OracleSpec interval(double L, int N) { return {Kind::Interval, L, 0.0, N}; }
  static OracleSpec rectangle(double a, double b, int N) { return {Kind::Rectangle, a, b, N}; }
  static OracleSpec disk(double R, int N) { return {Kind::Disk, R, 0.0, N}; }
  static OracleSpec annulus(double R, double r, int N) { return {Kind::Annulus, R, r, N}; }
};

/// Analytic spectra.  Bessel roots are bracketed on a fine scan and bisected
/// to an interval below 1e-13.
Spectrum oracle_spectrum(const OracleSpec& spec);

/// Positive zeros of J_m below `limit`, ascending.
std::vector<double> bessel_zeros(int m, double limit);
/// Positive roots k < limit of J_m(kR) Y_m(kr) - J_m(kr) Y_m(kR).
std::vector<double> annulus_roots(int m, double R, double r, double limit);

struct NormalDerivativeSample {
  Point point;
  double value;  // |du_k/dnu|^2
};

/// |du_k/dnu|^2 at obstacle edge midpoints; k is 1-based.
std::vector<NormalDerivativeSample> obstacle_normal_derivatives(const Spectrum& spectrum, int k);

}  // namespace specobs::fem
