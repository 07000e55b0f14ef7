#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "specobs/eigensolver.hpp"
#include "specobs/errors.hpp"
#include "specobs/format.hpp"
#include "specobs/hash.hpp"

namespace specobs::fem {

namespace {

constexpr double kPi = std::numbers::pi;

/// Sign changes of f on [lo, limit) with the given scan step, each refined
/// by bisection until the bracket is below 1e-13 (or cannot shrink).
std::vector<double> bracketed_roots(const std::function<double(double)>& f, double lo,
                                    double limit, double step) {
  std::vector<double> roots;
  double a = lo;
  double fa = f(a);
  while (a < limit) {
    const double b = std::min(a + step, limit);
    const double fb = f(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if (fa * fb < 0.0) {
      double x0 = a;
      double x1 = b;
      double f0 = fa;
      while (x1 - x0 > 1e-13) {
        const double mid = 0.5 * (x0 + x1);
        if (mid <= x0 || mid >= x1) break;
        const double fm = f(mid);
        if (fm == 0.0) {
          x0 = x1 = mid;
          break;
        }
        if ((fm < 0.0) == (f0 < 0.0)) {
          x0 = mid;
          f0 = fm;
        } else {
          x1 = mid;
        }
      }
      roots.push_back(0.5 * (x0 + x1));
    }
    if (b >= limit) break;
    a = b;
    fa = fb;
  }
  return roots;
}

Spectrum finish(std::vector<double> values, int N, int dimension, double measure,
                const std::string& literal) {
  std::sort(values.begin(), values.end());
  if (static_cast<int>(values.size()) < N) throw NumericalFailure("oracle enumeration fell short");
  values.resize(static_cast<std::size_t>(N));
  Spectrum s;
  s.eigenvalues = std::move(values);
  s.errors.assign(s.eigenvalues.size(), 0.0);
  s.dimension = dimension;
  s.measure = measure;
  s.domain_key = "oracle:" + literal;
  s.family_key = s.domain_key + ";N=" + std::to_string(N);
  s.fingerprint = sha256_hex(s.family_key);
  return s;
}

/// Collects (k/scale)^2 for all radial roots below `limit` over all angular
/// orders, doubling for m >= 1, growing the limit until N are found.
template <typename Roots>
std::vector<double> enumerate_radial(int N, double scale, double first_guess, Roots roots_for) {
  double limit = first_guess;
  while (true) {
    std::vector<double> values;
    for (int m = 0;; ++m) {
      const std::vector<double> roots = roots_for(m, limit);
      if (roots.empty()) break;
      for (double k : roots) {
        const double lambda = (k / scale) * (k / scale);
        values.push_back(lambda);
        if (m >= 1) values.push_back(lambda);
      }
    }
    if (static_cast<int>(values.size()) >= N) {
      std::sort(values.begin(), values.end());
      // Everything below (limit/scale)^2 is present, so the N smallest are exact.
      if (values[static_cast<std::size_t>(N - 1)] < (limit / scale) * (limit / scale)) {
        return values;
      }
    }
    limit *= 1.5;
  }
}

}  // namespace

std::vector<double> bessel_zeros(int m, double limit) {
  if (m < 0) throw InvalidInput("Bessel order must be nonnegative");
  const auto nu = static_cast<double>(m);
  // j_{m,1} > m; zeros are separated by more than 2.5.
  const double start = std::max(1e-3, nu);
  if (start >= limit) return {};
  return bracketed_roots([nu](double x) { return std::cyl_bessel_j(nu, x); }, start, limit, 0.1);
}

std::vector<double> annulus_roots(int m, double R, double r, double limit) {
  if (!(R > r && r > 0.0)) throw InvalidInput("annulus needs 0 < r < R");
  const auto nu = static_cast<double>(m);
  auto f = [nu, R, r](double k) {
    const double ynr = std::cyl_neumann(nu, k * r);
    if (!std::isfinite(ynr)) return -std::cyl_bessel_j(nu, k * R);
    return std::cyl_bessel_j(nu, k * R) * ynr - std::cyl_bessel_j(nu, k * r) * std::cyl_neumann(nu, k * R);
  };
  // Radial roots exceed j_{m,1}/R > m/R and are spaced about pi/(R-r) apart.
  const double start = std::max(1e-6, nu / R);
  if (start >= limit) return {};
  return bracketed_roots(f, start, limit, 0.02 * kPi / (R - r));
}

Spectrum oracle_spectrum(const OracleSpec& spec) {
  if (spec.N < 1) throw InvalidInput("oracle needs N >= 1");
  const int N = spec.N;
  switch (spec.kind) {
    case OracleSpec::Kind::Interval: {
      const double L = spec.a;
      if (!(L > 0.0)) throw InvalidInput("interval length must be positive");
      std::vector<double> values;
      for (int k = 1; k <= N; ++k) values.push_back((k * kPi / L) * (k * kPi / L));
      return finish(std::move(values), N, 1, L, "interval(" + format_number(L) + ")");
    }
    case OracleSpec::Kind::Rectangle: {
      const double a = spec.a;
      const double b = spec.b;
      if (!(a > 0.0 && b > 0.0)) throw InvalidInput("rectangle sides must be positive");
      double bound = 4.0 * kPi * N / (a * b) + kPi * kPi * (1.0 / (a * a) + 1.0 / (b * b));
      while (true) {
        std::vector<double> values;
        for (int m = 1; kPi * kPi * m * m / (a * a) < bound; ++m) {
          for (int n = 1;; ++n) {
            const double v = kPi * kPi * (m * m / (a * a) + n * n / (b * b));
            if (v >= bound) break;
            values.push_back(v);
          }
        }
        if (static_cast<int>(values.size()) >= N) {
          return finish(std::move(values), N, 2, a * b,
                        "rectangle(" + format_number(a) + "," + format_number(b) + ")");
        }
        bound *= 1.5;
      }
    }
    case OracleSpec::Kind::Disk: {
      const double R = spec.a;
      if (!(R > 0.0)) throw InvalidInput("disk radius must be positive");
      const double guess = std::sqrt(4.0 * N / (R * R)) * R + 5.0;
      auto values = enumerate_radial(N, R, guess, [](int m, double lim) { return bessel_zeros(m, lim); });
      return finish(std::move(values), N, 2, kPi * R * R, "disk(" + format_number(R) + ")");
    }
    case OracleSpec::Kind::Annulus: {
      const double R = spec.a;
      const double r = spec.b;
      if (!(R > r && r > 0.0)) throw InvalidInput("annulus needs 0 < r < R");
      const double area = kPi * (R * R - r * r);
      const double guess = std::sqrt(4.0 * kPi * N / area) + 5.0;
      auto values = enumerate_radial(N, 1.0, guess,
                                     [R, r](int m, double lim) { return annulus_roots(m, R, r, lim); });
      return finish(std::move(values), N, 2, area,
                    "annulus(" + format_number(R) + "," + format_number(r) + ")");
    }
  }
  throw InvalidInput("unknown oracle kind");
}

}  // namespace specobs::fem
