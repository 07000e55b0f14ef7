#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "specobs/eigensolver.hpp"
#include "specobs/geometry.hpp"
#include "specobs/spectra.hpp"
#include "specobs/spectrum.hpp"

namespace specobs::variation {

/// -t sum_k exp(-lambda_k t) sum_e |du_k/dnu|^2 (V . nu_e) len_e over the
/// obstacle edges: dZ/deps for the rigid translation of the obstacle by eps V.
double hadamard_derivative(const Spectrum& spectrum, double t, Point V);

/// d lambda_k / deps = sum_e |du_k/dnu|^2 (V . nu_e) len_e (k is 1-based).
double eigenvalue_derivative(const Spectrum& spectrum, int k, Point V);

struct HadamardCheck {
  double t = 0.0;
  Point direction;
  double boundary_integral = 0.0;
  double finite_difference = 0.0;
  double relative_gap = 0.0;  // |bi - fd| / max(|bi|, |fd|, floor)
};

struct HadamardOptions {
  double h = 0.02;
  double grading = 1.0;
  int N = 100;
  double eps = 1e-3;  // obstacle displacement for the central difference
  double floor = 1e-12;
  fem::SolverOptions solver;
};

/// Boundary-integral dZ/deps against the central difference of Z over meshes
/// with the obstacle moved by +-eps V (same connectivity: the mesh nodes are
/// carried along by a smooth cutoff that fixes the outer boundary).
std::vector<HadamardCheck> hadamard_check(const geometry::ObstacleDomain& domain,
                                          const std::vector<double>& times, Point V,
                                          const HadamardOptions& options = {});

/// Spectrum for an obstacle position.  `variant` selects an independent mesh
/// realization of the same resolution (0 is the primary one).
using SpectrumProvider = std::function<Spectrum(const geometry::ObstacleDomain&, int variant)>;

/// Provider that meshes at (h, grading) and solves for N eigenvalues; the
/// variant rotates the interior lattice.
SpectrumProvider mesh_provider(double h, double grading, int N, fem::SolverOptions solver = {});

struct SweepPoint {
  Point center;
  std::string fingerprint;
  double lambda1 = 0.0;
  double lambda1_error = 0.0;
  std::vector<double> Z;      // on the shared t grid
  std::vector<double> Z_err;  // truncation + solver + mesh-noise estimate
  /// zeta'(0) relative to the first path point and to the previous one.
  std::optional<spectra::RelativeZeta> dzeta;
  std::optional<spectra::RelativeZeta> dzeta_step;
  /// Disagreement of the two values with the second mesh realization.
  double dzeta_noise = 0.0;
  double dzeta_step_noise = 0.0;
};

struct SweepResult {
  std::vector<Point> positions;
  std::vector<double> t_grid;
  std::vector<SweepPoint> points;
};

struct SweepOptions {
  int jobs = 1;
  /// Solve a second mesh realization per position and add |Z - Z'| to Z_err.
  bool mesh_noise = true;
  bool relative_zeta = true;
  double margin = 0.0;  // required dist(center, boundary of D) - r; 0 means use h
};

/// Runs the provider on each center (in parallel, results in path order).
SweepResult sweep(const geometry::ConvexDomain& outer, double r, const std::vector<Point>& path,
                  const std::vector<double>& t_grid, double h, const SpectrumProvider& provider,
                  const SweepOptions& options = {});

enum class Quantity : std::uint8_t { Z, Lambda1, Det };
enum class Direction : std::uint8_t { Nondecreasing, Nonincreasing };

struct MonotoneReport {
  bool pass = false;       // every step has the asserted sign up to the slack
  bool certified = false;  // every step exceeds its combined error estimate
  double margin = 0.0;     // min over steps of the signed step (asserted direction positive)
  std::vector<double> steps;   // signed, asserted direction positive
  std::vector<double> errors;  // combined error per step
};

/// Z uses t_grid[t_index].  Det works on log det = -zeta'(0) through the
/// per-step relative zeta'(0), with its quadrature, truncation and
/// mesh-noise errors.
MonotoneReport verify_monotone(const SweepResult& sweep, Quantity quantity, Direction direction,
                               double slack = 0.0, std::size_t t_index = 0);

struct LocalizationReport {
  geometry::HeartPolygon heart;
  double spacing = 0.0;
  double margin = 0.0;
  std::vector<Point> centers;  // admissible grid centers
  std::vector<double> Z;
  std::vector<double> Z_err;
  std::vector<bool> shell;  // within one spacing of the inadmissible region
  std::size_t argmin = 0;
  std::size_t argmax = 0;
  double argmin_distance_to_heart = 0.0;
  bool argmin_near_heart = false;
  bool argmax_on_shell = false;
  bool argmax_in_heart = false;
};

struct LocalizationOptions {
  int heart_directions = 256;
  double spacing = 0.0;  // 0: min(0.05 diam, dist(heart, boundary)/4)
  double h = 0.02;
  int jobs = 1;
};

/// Z(t) over a square grid of admissible obstacle centers (anchored at the
/// heart centroid), with the argmin/argmax checks of the localization
/// experiment.
LocalizationReport heart_localization(const geometry::ConvexDomain& outer, double r, double t,
                                      const SpectrumProvider& provider,
                                      const LocalizationOptions& options = {});

struct Extrapolation {
  double limit = 0.0;
  double residual = 0.0;
  bool monotone_tail = true;
  int degree = 0;
};

/// Polynomial fit of values against margins (dist to contact), evaluated at
/// margin 0.  Needs at least 4 points.
Extrapolation boundary_limit_extrapolation(const std::vector<double>& margins,
                                           const std::vector<double>& values);

/// Reports as CSV; `header_line` carries version and config hash.
void write_sweep_csv(const SweepResult& sweep, const std::string& path,
                     const std::string& header_line, const std::string& footer = "");
void write_localization_csv(const LocalizationReport& report, const std::string& path,
                            const std::string& header_line);
void write_hadamard_csv(const std::vector<HadamardCheck>& checks, const std::string& path,
                        const std::string& header_line);

/// Minimal SVG plots.
void write_sweep_svg(const SweepResult& sweep, const std::string& path);
void write_localization_svg(const LocalizationReport& report, const geometry::ConvexDomain& outer,
                            const std::string& path);

}  // namespace specobs::variation
