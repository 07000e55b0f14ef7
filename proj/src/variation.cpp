#include "specobs/variation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "specobs/errors.hpp"
#include "specobs/format.hpp"
#include "specobs/mesher.hpp"
#include "specobs/parallel.hpp"

namespace specobs::variation {

namespace {

constexpr double kPi = std::numbers::pi;
// Lattice rotation of the second mesh realization.
constexpr double kVariantAngle = kPi / 6.0;
// Largest discarded-tail fraction of Z accepted for the Hadamard sum.
constexpr double kReliableTail = 1e-6;

const BoundaryData& boundary_of(const Spectrum& spectrum) {
  if (!spectrum.boundary) throw InvalidInput("spectrum carries no obstacle boundary data");
  return *spectrum.boundary;
}

double flux_integral(const BoundaryData& b, std::size_t k, Point V) {
  double sum = 0.0;
  const auto& d = b.normal_derivative[k];
  for (std::size_t e = 0; e < b.lengths.size(); ++e) {
    sum += b.lengths[e] * d[e] * d[e] * dot(V, b.normals[e]);
  }
  return sum;
}

/// Discarded tail plus the propagated eigenvalue errors: |dZ| <= sum t e^{-lambda t} |dlambda|.
double z_error(const Spectrum& s, double t, double truncation) {
  double e = truncation;
  for (std::size_t k = 0; k < s.size(); ++k) e += t * std::exp(-s.eigenvalues[k] * t) * s.errors[k];
  return e;
}

}  // namespace

double hadamard_derivative(const Spectrum& spectrum, double t, Point V) {
  const BoundaryData& b = boundary_of(spectrum);
  if (!(t > 0.0)) throw InvalidInput("heat time must be positive");
  // The derivative series is truncated like Z itself.
  const auto z = spectra::heat_trace(spectrum, t);
  if (z.truncation_bound > kReliableTail * z.value) {
    throw InvalidInput("t = " + format_number(t) + " is below the reliable window of this spectrum");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < b.normal_derivative.size(); ++k) {
    sum += std::exp(-spectrum.eigenvalues[k] * t) * flux_integral(b, k, V);
  }
  return -t * sum;
}

double eigenvalue_derivative(const Spectrum& spectrum, int k, Point V) {
  const BoundaryData& b = boundary_of(spectrum);
  if (k < 1 || static_cast<std::size_t>(k) > b.normal_derivative.size()) {
    throw InvalidInput("eigenvalue index out of range");
  }
  return flux_integral(b, static_cast<std::size_t>(k - 1), V);
}

std::vector<HadamardCheck> hadamard_check(const geometry::ObstacleDomain& domain,
                                          const std::vector<double>& times, Point V,
                                          const HadamardOptions& options) {
  if (!(options.eps > 0.0)) throw InvalidInput("finite-difference step must be positive");
  const mesh::Mesh base = mesh::mesh_domain(domain, options.h, options.grading);
  fem::SolverOptions with_flux = options.solver;
  with_flux.boundary_data = true;
  fem::SolverOptions plain = options.solver;
  plain.boundary_data = false;
  const Spectrum centre = fem::assemble_and_solve(base, options.N, with_flux);
  const Spectrum plus =
      fem::assemble_and_solve(mesh::translate_obstacle(base, V, options.eps), options.N, plain);
  const Spectrum minus =
      fem::assemble_and_solve(mesh::translate_obstacle(base, V, -options.eps), options.N, plain);

  std::vector<HadamardCheck> out;
  for (double t : times) {
    if (!(t > 0.0)) throw InvalidInput("heat times must be positive");
    HadamardCheck c;
    c.t = t;
    c.direction = V;
    c.boundary_integral = hadamard_derivative(centre, t, V);
    c.finite_difference =
        (spectra::heat_trace(plus, t).value - spectra::heat_trace(minus, t).value) /
        (2.0 * options.eps);
    const double scale =
        std::max({std::abs(c.boundary_integral), std::abs(c.finite_difference), options.floor});
    c.relative_gap = std::abs(c.boundary_integral - c.finite_difference) / scale;
    out.push_back(c);
  }
  return out;
}

SpectrumProvider mesh_provider(double h, double grading, int N, fem::SolverOptions solver) {
  return [=](const geometry::ObstacleDomain& domain, int variant) {
    const mesh::Mesh m = mesh::mesh_domain(domain, h, grading, variant * kVariantAngle);
    return fem::assemble_and_solve(m, N, solver);
  };
}

SweepResult sweep(const geometry::ConvexDomain& outer, double r, const std::vector<Point>& path,
                  const std::vector<double>& t_grid, double h, const SpectrumProvider& provider,
                  const SweepOptions& options) {
  if (path.empty()) throw InvalidInput("sweep path is empty");
  if (t_grid.empty()) throw InvalidInput("sweep needs at least one heat time");
  for (double t : t_grid) {
    if (!(t > 0.0)) throw InvalidInput("heat times must be positive");
  }
  const double margin = options.margin > 0.0 ? options.margin : h;
  std::vector<geometry::ObstacleDomain> domains;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double clearance = outer.boundary_distance(path[i]) - r;
    if (!(clearance > margin)) {
      throw InvalidInput("path point " + std::to_string(i) + " (" + format_number(path[i].x) +
                         "," + format_number(path[i].y) + ") has clearance " +
                         format_number(clearance) + ", needs > " + format_number(margin));
    }
    domains.push_back(geometry::ObstacleDomain::make(outer, path[i], r));
  }

  const int variants = options.mesh_noise ? 2 : 1;
  const std::size_t n = path.size();
  std::vector<Spectrum> spectra(n * static_cast<std::size_t>(variants));
  parallel_for(spectra.size(), options.jobs, [&](std::size_t task) {
    const std::size_t i = task / static_cast<std::size_t>(variants);
    const int variant = static_cast<int>(task % static_cast<std::size_t>(variants));
    spectra[task] = provider(domains[i], variant);
  });
  auto primary = [&](std::size_t i) -> const Spectrum& {
    return spectra[i * static_cast<std::size_t>(variants)];
  };
  auto secondary = [&](std::size_t i) -> const Spectrum& {
    return spectra[i * static_cast<std::size_t>(variants) + 1];
  };

  SweepResult result;
  result.positions = path;
  result.t_grid = t_grid;
  for (std::size_t i = 0; i < n; ++i) {
    const Spectrum& s = primary(i);
    if (s.size() == 0) throw NumericalFailure("empty spectrum at path point " + std::to_string(i));
    SweepPoint p;
    p.center = path[i];
    p.fingerprint = s.fingerprint;
    p.lambda1 = s.eigenvalues[0];
    p.lambda1_error = s.errors[0];
    if (variants == 2) p.lambda1_error += std::abs(s.eigenvalues[0] - secondary(i).eigenvalues[0]);
    for (double t : t_grid) {
      const auto z = spectra::heat_trace(s, t);
      double err = z_error(s, t, z.truncation_bound);
      if (variants == 2) err += std::abs(z.value - spectra::heat_trace(secondary(i), t).value);
      p.Z.push_back(z.value);
      p.Z_err.push_back(err);
    }
    if (options.relative_zeta && i > 0) {
      p.dzeta = spectra::relative_zeta_prime(s, primary(0));
      p.dzeta_step = spectra::relative_zeta_prime(s, primary(i - 1));
      if (variants == 2) {
        const auto alt = spectra::relative_zeta_prime(secondary(i), secondary(i - 1));
        p.dzeta_step_noise = std::abs(alt.value - p.dzeta_step->value);
        const auto alt0 = spectra::relative_zeta_prime(secondary(i), secondary(0));
        p.dzeta_noise = std::abs(alt0.value - p.dzeta->value);
      }
    }
    result.points.push_back(std::move(p));
  }
  return result;
}

MonotoneReport verify_monotone(const SweepResult& sweep, Quantity quantity, Direction direction,
                               double slack, std::size_t t_index) {
  const double sign = direction == Direction::Nondecreasing ? 1.0 : -1.0;
  MonotoneReport rep;
  const auto& pts = sweep.points;
  if (quantity == Quantity::Z && t_index >= sweep.t_grid.size()) {
    throw InvalidInput("heat time index out of range");
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    double step = 0.0;
    double err = 0.0;
    switch (quantity) {
      case Quantity::Z:
        step = pts[i].Z[t_index] - pts[i - 1].Z[t_index];
        err = pts[i].Z_err[t_index] + pts[i - 1].Z_err[t_index];
        break;
      case Quantity::Lambda1:
        step = pts[i].lambda1 - pts[i - 1].lambda1;
        err = pts[i].lambda1_error + pts[i - 1].lambda1_error;
        break;
      case Quantity::Det:
        if (!pts[i].dzeta_step) throw InvalidInput("sweep was run without relative zeta'(0)");
        // log det = -zeta'(0), so the step of log det is minus the zeta'(0) step.
        step = -pts[i].dzeta_step->value;
        err = pts[i].dzeta_step->error + pts[i].dzeta_step_noise;
        break;
    }
    rep.steps.push_back(sign * step);
    rep.errors.push_back(err);
  }
  rep.pass = true;
  rep.certified = true;
  rep.margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.steps.size(); ++i) {
    rep.margin = std::min(rep.margin, rep.steps[i]);
    if (rep.steps[i] < -slack) rep.pass = false;
    if (!(rep.steps[i] > rep.errors[i])) rep.certified = false;
  }
  if (rep.steps.empty()) rep.margin = 0.0;
  return rep;
}

LocalizationReport heart_localization(const geometry::ConvexDomain& outer, double r, double t,
                                      const SpectrumProvider& provider,
                                      const LocalizationOptions& options) {
  if (!(r > 0.0)) throw InvalidInput("obstacle radius must be positive");
  if (!(t > 0.0)) throw InvalidInput("heat time must be positive");
  LocalizationReport rep;
  rep.heart = geometry::compute_heart(outer, options.heart_directions);
  const auto& hv = rep.heart.vertices;
  double heart_gap = std::numeric_limits<double>::infinity();
  for (const Point& v : hv) heart_gap = std::min(heart_gap, outer.boundary_distance(v));
  rep.spacing = options.spacing > 0.0 ? options.spacing
                                      : std::min(0.05 * outer.diameter(), heart_gap / 4.0);
  rep.margin = 2.0 * options.h;
  const double reach = r + rep.margin;

  const Point c = rep.heart.centroid();
  const auto [x0, x1] = outer.support({1.0, 0.0});
  const auto [y0, y1] = outer.support({0.0, 1.0});
  const auto i0 = static_cast<long>(std::floor((x0 - c.x) / rep.spacing));
  const auto i1 = static_cast<long>(std::ceil((x1 - c.x) / rep.spacing));
  const auto j0 = static_cast<long>(std::floor((y0 - c.y) / rep.spacing));
  const auto j1 = static_cast<long>(std::ceil((y1 - c.y) / rep.spacing));
  for (long j = j0; j <= j1; ++j) {
    for (long i = i0; i <= i1; ++i) {
      const Point p{c.x + static_cast<double>(i) * rep.spacing,
                    c.y + static_cast<double>(j) * rep.spacing};
      const double dist = outer.boundary_distance(p);
      if (dist < reach) continue;
      rep.centers.push_back(p);
      // Clearance is the exact distance to the inadmissible set for convex D.
      rep.shell.push_back(dist - reach < rep.spacing);
    }
  }
  std::vector<double> rows;
  for (const Point& p : rep.centers) rows.push_back(p.y);
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  if (rows.size() < 3) {
    throw InvalidInput("grid too coarse: " + std::to_string(rows.size()) +
                       " admissible rows, need at least 3");
  }

  rep.Z.assign(rep.centers.size(), 0.0);
  rep.Z_err.assign(rep.centers.size(), 0.0);
  parallel_for(rep.centers.size(), options.jobs, [&](std::size_t k) {
    const Spectrum s = provider(geometry::ObstacleDomain::make(outer, rep.centers[k], r), 0);
    const auto z = spectra::heat_trace(s, t);
    rep.Z[k] = z.value;
    rep.Z_err[k] = z_error(s, t, z.truncation_bound);
  });
  rep.argmin = static_cast<std::size_t>(std::min_element(rep.Z.begin(), rep.Z.end()) - rep.Z.begin());
  rep.argmax = static_cast<std::size_t>(std::max_element(rep.Z.begin(), rep.Z.end()) - rep.Z.begin());
  auto heart_distance = [&](Point p) {
    return rep.heart.is_point() ? distance(p, hv.front()) : geometry::distance_to_polygon(hv, p);
  };
  rep.argmin_distance_to_heart = heart_distance(rep.centers[rep.argmin]);
  rep.argmin_near_heart = rep.argmin_distance_to_heart <= rep.spacing * (1.0 + 1e-9);
  rep.argmax_on_shell = rep.shell[rep.argmax];
  rep.argmax_in_heart = heart_distance(rep.centers[rep.argmax]) == 0.0;
  return rep;
}

Extrapolation boundary_limit_extrapolation(const std::vector<double>& margins,
                                           const std::vector<double>& values) {
  if (margins.size() != values.size()) throw InvalidInput("margins and values differ in length");
  const auto n = static_cast<int>(margins.size());
  if (n < 4) throw InvalidInput("boundary extrapolation needs at least 4 points");
  for (double m : margins) {
    if (!(m > 0.0)) throw InvalidInput("margins must be positive");
  }
  Extrapolation out;
  out.degree = std::min(2, n - 2);
  Eigen::MatrixXd A(n, out.degree + 1);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k <= out.degree; ++k) A(i, k) = std::pow(margins[static_cast<std::size_t>(i)], k);
    b(i) = values[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(b);
  out.limit = coef(0);
  out.residual = std::sqrt((A * coef - b).squaredNorm() / n);

  std::vector<std::size_t> order(margins.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto c) { return margins[a] < margins[c]; });
  int sign = 0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const double d = values[order[i]] - values[order[i - 1]];
    const int s = (d > 0.0) - (d < 0.0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) out.monotone_tail = false;
    sign = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::ofstream open_report(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  return out;
}

}  // namespace

void write_sweep_csv(const SweepResult& sweep, const std::string& path,
                     const std::string& header_line, const std::string& footer) {
  auto out = open_report(path);
  out << header_line << "\n"
      << "index,cx,cy,d,t,Z,Z_err,lambda1,lambda1_err,dzeta0,dzeta0_err,dzeta0_below_cut\n";
  const Point origin = sweep.positions.front();
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const SweepPoint& p = sweep.points[i];
    const double d = distance(p.center, origin);
    const double dz = p.dzeta ? p.dzeta->value : 0.0;
    const double dz_err = p.dzeta ? p.dzeta->error + p.dzeta_noise : 0.0;
    const double dz_cut = p.dzeta ? p.dzeta->below_cut : 0.0;
    for (std::size_t k = 0; k < sweep.t_grid.size(); ++k) {
      out << i << "," << format_report(p.center.x) << "," << format_report(p.center.y) << ","
          << format_report(d) << "," << format_report(sweep.t_grid[k]) << ","
          << format_report(p.Z[k]) << "," << format_report(p.Z_err[k]) << ","
          << format_report(p.lambda1) << "," << format_report(p.lambda1_error) << ","
          << format_report(dz) << "," << format_report(dz_err) << "," << format_report(dz_cut)
          << "\n";
    }
  }
  out << footer;
}

void write_localization_csv(const LocalizationReport& report, const std::string& path,
                            const std::string& header_line) {
  auto out = open_report(path);
  out << header_line << "\ncx,cy,Z,Z_err,shell,argmin,argmax\n";
  for (std::size_t k = 0; k < report.centers.size(); ++k) {
    out << format_report(report.centers[k].x) << "," << format_report(report.centers[k].y) << ","
        << format_report(report.Z[k]) << "," << format_report(report.Z_err[k]) << ","
        << (report.shell[k] ? 1 : 0) << "," << (k == report.argmin ? 1 : 0) << ","
        << (k == report.argmax ? 1 : 0) << "\n";
  }
  out << "# heart";
  for (const Point& v : report.heart.vertices) {
    out << " (" << format_report(v.x) << "," << format_report(v.y) << ")";
  }
  out << "\n# spacing " << format_report(report.spacing) << " margin "
      << format_report(report.margin) << "\n";
  out << "# argmin distance to heart " << format_report(report.argmin_distance_to_heart) << " "
      << (report.argmin_near_heart ? "PASS" : "FAIL") << "\n";
  out << "# argmax on outermost shell " << (report.argmax_on_shell ? "PASS" : "FAIL") << "\n";
  out << "# argmax branch " << (report.argmax_in_heart ? "interior of heart" : "near boundary")
      << "\n";
}

void write_hadamard_csv(const std::vector<HadamardCheck>& checks, const std::string& path,
                        const std::string& header_line) {
  auto out = open_report(path);
  out << header_line << "\nt,vx,vy,boundary_integral,finite_difference,relative_gap\n";
  for (const auto& c : checks) {
    out << format_report(c.t) << "," << format_report(c.direction.x) << ","
        << format_report(c.direction.y) << "," << format_report(c.boundary_integral) << ","
        << format_report(c.finite_difference) << "," << format_report(c.relative_gap) << "\n";
  }
}

namespace {

constexpr double kPlot = 480.0;
constexpr double kPad = 40.0;

std::string heat_colour(double u) {
  u = std::clamp(u, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 * u));
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(2.0 * u - 1.0)) * 0.8));
  const int b = static_cast<int>(std::lround(255.0 * (1.0 - u)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void write_sweep_svg(const SweepResult& sweep, const std::string& path) {
  auto out = open_report(path);
  const std::size_t n = sweep.points.size();
  const double w = kPlot + 2 * kPad;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << w
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kPad << "\" y=\"20\" font-size=\"12\">Z(t) and lambda1 along the path, "
      << "each rescaled to [0,1]</text>\n";
  const Point origin = sweep.positions.front();
  double dmax = 0.0;
  for (const auto& p : sweep.positions) dmax = std::max(dmax, distance(p, origin));
  if (dmax == 0.0) dmax = 1.0;
  auto curve = [&](const std::vector<double>& ys, const std::string& colour, const std::string& label,
                   int row) {
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    const double span = *hi > *lo ? *hi - *lo : 1.0;
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double x = kPad + kPlot * distance(sweep.positions[i], origin) / dmax;
      const double y = kPad + kPlot * (1.0 - (ys[i] - *lo) / span);
      out << format_report(x) << "," << format_report(y) << " ";
    }
    out << "\"/>\n<text x=\"" << kPad + 8 << "\" y=\"" << kPad + 14 * (row + 1)
        << "\" font-size=\"11\" fill=\"" << colour << "\">" << label << "</text>\n";
  };
  for (std::size_t k = 0; k < sweep.t_grid.size(); ++k) {
    std::vector<double> ys;
    for (std::size_t i = 0; i < n; ++i) ys.push_back(sweep.points[i].Z[k]);
    const double u = sweep.t_grid.size() > 1 ? static_cast<double>(k) / (sweep.t_grid.size() - 1) : 0.0;
    curve(ys, heat_colour(u), "Z, t=" + format_number(sweep.t_grid[k]), static_cast<int>(k));
  }
  std::vector<double> l1;
  for (const auto& p : sweep.points) l1.push_back(p.lambda1);
  curve(l1, "#000000", "lambda1", static_cast<int>(sweep.t_grid.size()));
  out << "<line x1=\"" << kPad << "\" y1=\"" << kPad + kPlot << "\" x2=\"" << kPad + kPlot
      << "\" y2=\"" << kPad + kPlot << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kPad + kPlot / 2 << "\" y=\"" << w - 10
      << "\" font-size=\"12\">distance along path (max " << format_number(dmax) << ")</text>\n";
  out << "</svg>\n";
}

void write_localization_svg(const LocalizationReport& report, const geometry::ConvexDomain& outer,
                            const std::string& path) {
  auto out = open_report(path);
  const auto [x0, x1] = outer.support({1.0, 0.0});
  const auto [y0, y1] = outer.support({0.0, 1.0});
  const double scale = kPlot / std::max(x1 - x0, y1 - y0);
  auto X = [&](double x) { return kPad + (x - x0) * scale; };
  auto Y = [&](double y) { return kPad + (y1 - y) * scale; };
  const double w = kPlot + 2 * kPad;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << w
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const auto [lo, hi] = std::minmax_element(report.Z.begin(), report.Z.end());
  const double span = *hi > *lo ? *hi - *lo : 1.0;
  const double cell = report.spacing * scale;
  for (std::size_t k = 0; k < report.centers.size(); ++k) {
    out << "<rect x=\"" << format_report(X(report.centers[k].x) - cell / 2) << "\" y=\""
        << format_report(Y(report.centers[k].y) - cell / 2) << "\" width=\"" << format_report(cell)
        << "\" height=\"" << format_report(cell) << "\" fill=\""
        << heat_colour((report.Z[k] - *lo) / span) << "\"/>\n";
  }
  if (outer.is_disk()) {
    const auto& d = outer.as_disk();
    out << "<circle cx=\"" << format_report(X(d.center.x)) << "\" cy=\""
        << format_report(Y(d.center.y)) << "\" r=\"" << format_report(d.radius * scale)
        << "\" fill=\"none\" stroke=\"black\"/>\n";
  } else {
    out << "<polygon fill=\"none\" stroke=\"black\" points=\"";
    for (const Point& v : outer.vertices()) out << format_report(X(v.x)) << "," << format_report(Y(v.y)) << " ";
    out << "\"/>\n";
  }
  const auto& hv = report.heart.vertices;
  if (report.heart.is_point()) {
    out << "<circle cx=\"" << format_report(X(hv[0].x)) << "\" cy=\"" << format_report(Y(hv[0].y))
        << "\" r=\"3\" fill=\"black\"/>\n";
  } else {
    out << "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (const Point& v : hv) out << format_report(X(v.x)) << "," << format_report(Y(v.y)) << " ";
    out << "\"/>\n";
  }
  for (auto [k, colour] : {std::pair{report.argmin, "white"}, std::pair{report.argmax, "black"}}) {
    out << "<circle cx=\"" << format_report(X(report.centers[k].x)) << "\" cy=\""
        << format_report(Y(report.centers[k].y)) << "\" r=\"4\" fill=\"none\" stroke=\"" << colour
        << "\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace specobs::variation
