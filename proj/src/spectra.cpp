#include "specobs/spectra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>

#include "specobs/errors.hpp"
#include "specobs/format.hpp"

namespace specobs::spectra {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sum_exponentials(const Spectrum& s, double t) {
  // Smallest terms first.
  double z = 0.0;
  for (auto it = s.eigenvalues.rbegin(); it != s.eigenvalues.rend(); ++it) z += std::exp(-*it * t);
  return z;
}

struct Quadrature {
  double value = 0.0;
  double error = 0.0;
};

/// Integral of g(t) dt/t over [ta, tb]: trapezoid in log t with the given
/// density, extrapolated against the half-density rule.
Quadrature log_trapezoid(const std::function<double(double)>& g, double ta, double tb,
                         int points_per_decade) {
  if (!(tb > ta)) return {};
  int n = static_cast<int>(std::ceil(points_per_decade * std::log10(tb / ta)));
  n = std::max(4, n + (n % 2));
  const double ua = std::log(ta);
  const double du = (std::log(tb) - ua) / n;
  double fine = 0.0;
  double coarse = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    const double v = g(std::exp(ua + i * du));
    fine += w * v;
    if (i % 2 == 0) coarse += w * v;
  }
  fine *= du;
  coarse *= 2.0 * du;
  return {fine + (fine - coarse) / 3.0, std::abs(fine - coarse) / 3.0};
}

double asymptotic_sum(const AsymptoticCoefficients& c, double t) {
  double a = 0.0;
  for (int k = 0; k <= c.n; ++k) {
    a += c.a[static_cast<std::size_t>(k)] * std::pow(t, 0.5 * (k - c.n));
  }
  return a;
}

void check_coefficients(const AsymptoticCoefficients& c) {
  if (c.n < 1 || static_cast<int>(c.a.size()) != c.n + 1) {
    throw InvalidInput("asymptotic coefficients need n >= 1 and n + 1 entries");
  }
}

void check_pole(const AsymptoticCoefficients& c, double s) {
  for (int k = 0; k < c.n; ++k) {
    const double pole = 0.5 * (c.n - k);
    if (std::abs(s - pole) < 1e-8) {
      throw InvalidInput("s = " + format_number(s) + " is within 1e-8 of the pole " +
                         format_number(pole));
    }
  }
}

double lowest(const Spectrum& s) {
  if (s.eigenvalues.empty()) throw InvalidInput("empty spectrum");
  return s.eigenvalues.front();
}

/// Upper integration limit where Z(t) t^s is negligible.
double large_time_limit(const Spectrum& sp, double t_split, double s) {
  const double lam = lowest(sp);
  double t = t_split;
  const double count = static_cast<double>(sp.size());
  while (std::log(count) - lam * t + s * std::log(t) > std::log(1e-18)) t *= 2.0;
  return t;
}

/// Pieces of the Mellin integral that do not involve R(s):
/// int_0^T (Z - A) t^{s-1} dt + int_T^inf Z t^{s-1} dt.
struct MellinParts {
  double value = 0.0;
  double quadrature_error = 0.0;
  double truncation_error = 0.0;
  double fit_error = 0.0;
  double t_reliable = 0.0;
};

MellinParts mellin_parts(const Spectrum& sp, const AsymptoticCoefficients& c, double s,
                         const ZetaOptions& opt) {
  const double T = opt.t_split;
  const double t_rel = min_time_for_tolerance(sp, opt.eps);
  if (!(t_rel <= 0.25 * T)) {
    throw NumericalFailure("spectrum too short: truncation tolerance reached only at t = " +
                           format_number(t_rel) + ", need t <= t_split/4");
  }
  MellinParts out;
  out.t_reliable = t_rel;
  const int ppd = opt.points_per_decade;

  const auto small = log_trapezoid(
      [&](double t) { return (sum_exponentials(sp, t) - asymptotic_sum(c, t)) * std::pow(t, s); },
      t_rel, T, ppd);
  const double t_hi = large_time_limit(sp, T, s);
  const auto large =
      log_trapezoid([&](double t) { return sum_exponentials(sp, t) * std::pow(t, s); }, T, t_hi, ppd);
  const auto trunc = log_trapezoid([&](double t) { return tail_bound(sp, t) * std::pow(t, s); },
                                   t_rel, t_hi, ppd);

  // Below t_rel: Z - A ~ c1 t^{1/2} + c2 t, least squares on [t_rel, 4 t_rel].
  const int m = std::max(8, static_cast<int>(std::ceil(ppd * std::log10(4.0))) + 1);
  Eigen::MatrixXd basis(m, 2);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    const double t = t_rel * std::pow(4.0, static_cast<double>(i) / (m - 1));
    basis(i, 0) = std::sqrt(t);
    basis(i, 1) = t;
    rhs(i) = sum_exponentials(sp, t) - asymptotic_sum(c, t);
  }
  const Eigen::Vector2d coef = basis.colPivHouseholderQr().solve(rhs);
  const double residual = (basis * coef - rhs).cwiseAbs().maxCoeff();
  const double model = coef(0) * std::pow(t_rel, s + 0.5) / (s + 0.5) +
                       coef(1) * std::pow(t_rel, s + 1.0) / (s + 1.0);
  // Unmodeled terms vanish at least like t^{1/2} relative to the window.
  const double fit_bound = (residual + opt.eps * sum_exponentials(sp, t_rel)) *
                           std::pow(t_rel, s) / (s + 0.5);

  out.value = small.value + large.value + model;
  out.quadrature_error = small.error + large.error + 1e-18;
  out.truncation_error = trunc.value;
  out.fit_error = fit_bound;
  return out;
}

double direct_tail(const Spectrum& sp, double s) {
  if (sp.complete) return 0.0;
  const double exponent = 2.0 * s / sp.dimension;
  if (!(exponent > 1.0)) return kInf;
  const double c = li_yau_constant(sp);
  const auto N = static_cast<double>(sp.size());
  return std::pow(c, -s) * std::pow(N, 1.0 - exponent) / (exponent - 1.0);
}

double corner_term(double theta) { return (kPi * kPi - theta * theta) / (24.0 * kPi * theta); }

double polygon_corner_sum(const std::vector<Point>& v) {
  double sum = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = v[(i + n - 1) % n] - v[i];
    const Point b = v[(i + 1) % n] - v[i];
    const double theta = std::acos(std::clamp(geometry::dot(a, b) / (geometry::norm(a) * geometry::norm(b)), -1.0, 1.0));
    sum += corner_term(theta);
  }
  return sum;
}

double outer_a2(const geometry::ConvexDomain& d) {
  // Smooth boundary: (1/(12 pi)) * (total curvature 2 pi).
  return d.is_disk() ? 1.0 / 6.0 : polygon_corner_sum(d.vertices());
}

}  // namespace

double li_yau_constant(const Spectrum& s) {
  if (!(s.measure > 0.0)) throw InvalidInput("spectrum has no domain measure for tail bounds");
  if (s.dimension == 2) return 2.0 * kPi / s.measure;
  if (s.dimension == 1) return kPi * kPi / (3.0 * s.measure * s.measure);
  throw InvalidInput("tail bounds implemented for n = 1 and n = 2 only");
}

double tail_bound(const Spectrum& s, double t) {
  if (s.complete) return 0.0;
  const double c = li_yau_constant(s);
  const auto N = static_cast<double>(s.size());
  if (s.dimension == 2) {
    return std::exp(-c * (N + 1.0) * t) / -std::expm1(-c * t);
  }
  const double x = c * t;
  return 0.5 * std::sqrt(kPi / x) * std::erfc(N * std::sqrt(x));
}

HeatTraceSample heat_trace(const Spectrum& spectrum, double t) {
  if (!(t > 0.0)) throw InvalidInput("heat trace needs t > 0");
  return {t, sum_exponentials(spectrum, t), tail_bound(spectrum, t)};
}

double min_time_for_tolerance(const Spectrum& spectrum, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("tolerance must be positive");
  constexpr int kPerDecade = 40;
  constexpr int kLo = -10 * kPerDecade;
  constexpr int kHi = 4 * kPerDecade;
  double best = kInf;
  for (int i = kHi; i >= kLo; --i) {
    const double t = std::pow(10.0, static_cast<double>(i) / kPerDecade);
    const HeatTraceSample z = heat_trace(spectrum, t);
    const bool ok = z.truncation_bound == 0.0 || std::isinf(eps) || z.truncation_bound <= eps * z.value;
    if (!ok) break;
    best = t;
  }
  return best;
}

AsymptoticCoefficients asymptotic_coefficients(const geometry::ObstacleDomain& domain) {
  // The obstacle circle has total curvature -2 pi as seen from Omega.
  return {2,
          {domain.area() / (4.0 * kPi), -domain.perimeter() / (8.0 * std::sqrt(kPi)),
           outer_a2(domain.outer) - 1.0 / 6.0}};
}

AsymptoticCoefficients asymptotic_coefficients(const geometry::ConvexDomain& domain) {
  return {2,
          {domain.area() / (4.0 * kPi), -domain.perimeter() / (8.0 * std::sqrt(kPi)),
           outer_a2(domain)}};
}

AsymptoticCoefficients interval_coefficients(double L) {
  if (!(L > 0.0)) throw InvalidInput("interval length must be positive");
  return {1, {L / (2.0 * std::sqrt(kPi)), -0.5}};
}

double R_of_s(const AsymptoticCoefficients& c, double s, double t_split) {
  check_coefficients(c);
  check_pole(c, s);
  // a_n T^s / Gamma(s+1) is the s -> 0 safe form of a_n T^s / (s Gamma(s)).
  double r = c.a.back() * std::pow(t_split, s) / std::tgamma(s + 1.0);
  double rest = 0.0;
  for (int k = 0; k < c.n; ++k) {
    const double p = 0.5 * (c.n - k);
    rest += c.a[static_cast<std::size_t>(k)] * std::pow(t_split, s - p) / (s - p);
  }
  if (s == 0.0) return r;
  // 1/Gamma(s) is entire; tgamma has poles only at nonpositive integers.
  const double inv_gamma = (s == std::floor(s) && s <= 0.0) ? 0.0 : 1.0 / std::tgamma(s);
  return r + inv_gamma * rest;
}

double R_prime_zero(const AsymptoticCoefficients& c, double t_split) {
  check_coefficients(c);
  double d = c.a.back() * (kEulerGamma + std::log(t_split));
  for (int k = 0; k < c.n; ++k) {
    d -= 2.0 * c.a[static_cast<std::size_t>(k)] * std::pow(t_split, -0.5 * (c.n - k)) / (c.n - k);
  }
  return d;
}

ZetaValue zeta(const Spectrum& spectrum, const AsymptoticCoefficients& coeffs, double s,
               ZetaBranch branch, const ZetaOptions& options) {
  if (!(s > 0.0)) throw InvalidInput("zeta needs s > 0");
  check_coefficients(coeffs);
  if (branch == ZetaBranch::Auto) {
    branch = s > 0.5 * spectrum.dimension ? ZetaBranch::Direct : ZetaBranch::Mellin;
  }
  ZetaValue out;
  out.s = s;
  out.branch = branch;
  if (branch == ZetaBranch::Direct) {
    double sum = 0.0;
    for (auto it = spectrum.eigenvalues.rbegin(); it != spectrum.eigenvalues.rend(); ++it) {
      sum += std::pow(*it, -s);
    }
    out.value = sum;
    out.error = direct_tail(spectrum, s);
    if (!std::isfinite(out.error)) {
      throw InvalidInput("direct zeta series diverges for s <= n/2; use the Mellin branch");
    }
    return out;
  }
  check_pole(coeffs, s);
  const MellinParts parts = mellin_parts(spectrum, coeffs, s, options);
  const double inv_gamma = 1.0 / std::tgamma(s);
  out.value = R_of_s(coeffs, s, options.t_split) + inv_gamma * parts.value;
  out.error = std::abs(inv_gamma) * (parts.quadrature_error + parts.truncation_error + parts.fit_error);
  return out;
}

SpectralReport zeta_prime_zero_and_det(const Spectrum& spectrum,
                                       const AsymptoticCoefficients& coeffs,
                                       const std::vector<double>& s_grid,
                                       const ZetaOptions& options) {
  check_coefficients(coeffs);
  SpectralReport report;
  const MellinParts parts = mellin_parts(spectrum, coeffs, 0.0, options);
  if (!(parts.t_reliable <= 0.1)) {
    throw NumericalFailure("spectrum too short for zeta'(0): reliable only for t >= " +
                           format_number(parts.t_reliable));
  }
  report.t_reliable = parts.t_reliable;
  report.zeta_zero = coeffs.a.back();
  report.zeta_prime_zero = R_prime_zero(coeffs, options.t_split) + parts.value;
  report.zeta_prime_zero_error = parts.quadrature_error + parts.truncation_error + parts.fit_error;
  report.determinant = std::exp(-report.zeta_prime_zero);
  report.determinant_error = report.determinant * std::expm1(report.zeta_prime_zero_error);
  for (double s : s_grid) report.zeta_values.push_back(zeta(spectrum, coeffs, s, ZetaBranch::Auto, options));
  report.provenance.push_back(spectrum.fingerprint);
  return report;
}

namespace {

/// Integral of D(t)/t over (0, t_cut) for D = A exp(-a/t) fitted through
/// t_cut and the next grid time above it: A E1(a/t_cut).  Falls back to
/// |D(t_cut)| when the two samples do not fit that form.
double below_cut_estimate(const std::function<double(double)>& D, double t_cut, double step) {
  const double t1 = t_cut;
  const double t2 = t_cut * step;
  const double d1 = D(t1);
  const double d2 = D(t2);
  if (d1 == 0.0) return 0.0;
  if (d1 * d2 <= 0.0 || std::abs(d2) <= std::abs(d1)) return d1;
  const double a = std::log(d2 / d1) / (1.0 / t1 - 1.0 / t2);
  const double x = a / t1;
  if (!(x > 0.0) || !std::isfinite(x)) return d1;
  return d1 * std::exp(x) * -std::expint(-x);
}

}  // namespace

RelativeZeta relative_zeta_prime(const Spectrum& a, const Spectrum& b, const ZetaOptions& options) {
  if (a.family_key != b.family_key || a.dimension != b.dimension || a.size() != b.size()) {
    throw InvalidInput("relative zeta'(0) needs spectra of the same outer domain, radius, N and h");
  }
  const double t_hi = std::max(large_time_limit(a, 1.0, 0.0), large_time_limit(b, 1.0, 0.0));
  const int ppd = options.points_per_decade;
  auto difference = [&](double t) { return sum_exponentials(a, t) - sum_exponentials(b, t); };
  auto bound = [&](double t) { return tail_bound(a, t) + tail_bound(b, t); };

  // Walk down the grid while the difference is resolved above the truncation bounds.
  const double step = std::pow(10.0, 1.0 / ppd);
  double t_cut = t_hi;
  for (double t = t_hi; t > 1e-10; t /= step) {
    if (!(bound(t) < std::abs(difference(t)))) break;
    t_cut = t;
  }
  RelativeZeta out;
  out.t_cut = t_cut;
  if (t_cut >= t_hi) {
    out.error = std::abs(difference(t_hi)) + bound(t_hi);
    return out;
  }
  const auto main = log_trapezoid(difference, t_cut, t_hi, ppd);
  const auto trunc = log_trapezoid(bound, t_cut, t_hi, ppd);
  out.value = main.value;
  out.error = main.error + trunc.value;
  out.below_cut = below_cut_estimate(difference, t_cut, step);
  out.det_ratio = std::exp(-out.value);
  return out;
}

void write_report_csv(const SpectralReport& report, const std::string& path,
                      const std::string& header_line) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << header_line << "\nquantity,s,value,error\n";
  for (const auto& z : report.zeta_values) {
    out << "zeta," << format_report(z.s) << "," << format_report(z.value) << ","
        << format_report(z.error) << "\n";
  }
  out << "zeta0,0," << format_report(report.zeta_zero) << ",0\n";
  out << "zeta_prime0,0," << format_report(report.zeta_prime_zero) << ","
      << format_report(report.zeta_prime_zero_error) << "\n";
  out << "det,," << format_report(report.determinant) << ","
      << format_report(report.determinant_error) << "\n";
}

}  // namespace specobs::spectra
