#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specobs/geometry.hpp"
#include "specobs/spectrum.hpp"

namespace specobs::spectra {

struct HeatTraceSample {
  double t = 0.0;
  double value = 0.0;
  double truncation_bound = 0.0;  // bound on the discarded sum over k > N
};

/// Z(t) = sum_k exp(-lambda_k t) over the stored eigenvalues, plus a tail
/// bound from the Li-Yau floor lambda_k >= c k^{2/n}.
HeatTraceSample heat_trace(const Spectrum& spectrum, double t);

/// Bound on sum_{k>N} exp(-lambda_k t).
double tail_bound(const Spectrum& spectrum, double t);

/// Constant c of the floor lambda_k >= c k^{2/n}: 2 pi / |Omega| for n = 2,
/// pi^2 / (3 L^2) for n = 1.
double li_yau_constant(const Spectrum& spectrum);

/// Smallest t of the log grid 1e-10 .. 1e4 (40 points per decade) such that
/// every grid time >= t has truncation_bound <= eps * value.  Infinity when
/// no grid time qualifies.
double min_time_for_tolerance(const Spectrum& spectrum, double eps);

/// Small-t expansion Z(t) ~ sum_{k=0}^{n} a_k t^{(k-n)/2}.
struct AsymptoticCoefficients {
  int n = 2;
  std::vector<double> a;  // a_0 .. a_n
};

/// a_0 = |Omega|/(4 pi), a_1 = -|dOmega|/(8 sqrt(pi)),
/// a_2 = (1/(12 pi)) * total boundary curvature + corner terms
/// sum (pi^2 - theta^2)/(24 pi theta).  For smooth D minus a disk, a_2 = 0.
AsymptoticCoefficients asymptotic_coefficients(const geometry::ObstacleDomain& domain);
/// Same for D without an obstacle (disk: a_2 = 1/6; polygons: corner sum).
AsymptoticCoefficients asymptotic_coefficients(const geometry::ConvexDomain& domain);
/// One-dimensional validation mode: interval of length L.
AsymptoticCoefficients interval_coefficients(double L);

/// R(s) = (1/Gamma(s)) sum_k a_k T^{s-p_k}/(s - p_k), p_k = (n-k)/2, with
/// T = t_split.  Finite at s = 0 (R(0) = a_n).
double R_of_s(const AsymptoticCoefficients& coeffs, double s, double t_split = 1.0);

/// dR/ds at s = 0: a_n (gamma + log T) - sum_{k<n} 2 a_k T^{-p_k} / (n-k).
double R_prime_zero(const AsymptoticCoefficients& coeffs, double t_split = 1.0);

enum class ZetaBranch : std::uint8_t { Auto, Direct, Mellin };

struct ZetaValue {
  double s = 0.0;
  double value = 0.0;
  double error = 0.0;
  ZetaBranch branch = ZetaBranch::Auto;
};

struct ZetaOptions {
  double t_split = 1.0;
  double eps = 1e-8;  // truncation tolerance for the reliable window
  int points_per_decade = 40;
};

/// zeta(s).  Auto picks the direct series for s > n/2 and the Mellin split
/// otherwise.
ZetaValue zeta(const Spectrum& spectrum, const AsymptoticCoefficients& coeffs, double s,
               ZetaBranch branch = ZetaBranch::Auto, const ZetaOptions& options = {});

struct SpectralReport {
  std::vector<ZetaValue> zeta_values;
  double zeta_zero = 0.0;  // = a_n
  double zeta_prime_zero = 0.0;
  double zeta_prime_zero_error = 0.0;
  double determinant = 0.0;
  double determinant_error = 0.0;
  double t_reliable = 0.0;
  std::vector<std::string> provenance;
};

/// zeta'(0) from the split formula and det = exp(-zeta'(0)); zeta values at
/// each s in s_grid.
SpectralReport zeta_prime_zero_and_det(const Spectrum& spectrum,
                                       const AsymptoticCoefficients& coeffs,
                                       const std::vector<double>& s_grid = {},
                                       const ZetaOptions& options = {});

struct RelativeZeta {
  double value = 0.0;  // integral of (Z_a - Z_b)/t over [t_cut, inf)
  double error = 0.0;  // quadrature + truncation bounds on that integral
  double t_cut = 0.0;
  /// Estimate of the unresolved integral over (0, t_cut), from an
  /// exp(-a/t) fit of Z_a - Z_b just above the cut.  When Z_a - Z_b keeps
  /// one sign it has the sign of `value`, so |value| - error is a lower bound
  /// for the full difference.
  double below_cut = 0.0;
  double det_ratio = 1.0;  // exp(-value) = det_a / det_b up to below_cut
};

/// Position-relative zeta'(0) = zeta_a'(0) - zeta_b'(0): integral of
/// (Z_a - Z_b)/t over t > 0, truncated where the spectra stop resolving it.
RelativeZeta relative_zeta_prime(const Spectrum& a, const Spectrum& b,
                                 const ZetaOptions& options = {});

void write_report_csv(const SpectralReport& report, const std::string& path,
                      const std::string& header_line);

}  // namespace specobs::spectra
