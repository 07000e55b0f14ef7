#pragma once

#include <optional>
#include <string>
#include <vector>

#include "specobs/geometry.hpp"

namespace specobs {

using geometry::Point;

/// Eigenfunction normal derivatives on the obstacle boundary, one entry per
/// obstacle edge (in mesh order).
struct BoundaryData {
  std::vector<Point> midpoints;
  std::vector<Point> normals;  // unit, pointing into Omega (away from the obstacle center)
  std::vector<double> lengths;
  /// normal_derivative[k][e]: du_k/dnu at the midpoint of edge e.
  std::vector<std::vector<double>> normal_derivative;
  /// |u_k^T M u_k - 1| for each eigenfunction.
  std::vector<double> normalization_error;
};

/// Lowest Dirichlet eigenvalues of a domain, with per-eigenvalue error
/// estimates and the keys that identify what was computed.
struct Spectrum {
  std::vector<double> eigenvalues;  // nondecreasing
  std::vector<double> errors;       // same length; absolute
  int dimension = 2;
  double measure = 0.0;  // |Omega| (length for intervals)
  /// True when `eigenvalues` is the entire spectrum (synthetic inputs); the
  /// tail bounds are then zero.
  bool complete = false;
  /// Geometry and discretization without the obstacle center (D, r, h,
  /// grading, N, tolerance).  Spectra that differ only in the center share it.
  std::string family_key;
  /// Geometry including the center, without mesh parameters.
  std::string domain_key;
  /// SHA-256 over everything that determines the eigenvalues.
  std::string fingerprint;
  double h = 0.0;
  std::optional<BoundaryData> boundary;

  std::size_t size() const { return eigenvalues.size(); }

  /// A finite, complete spectrum (no tail).
  static Spectrum synthetic(std::vector<double> values, int dimension = 2);
};

/// k-th coordinates of the spectrum CSV: "k,lambda,error".
void write_spectrum_csv(const Spectrum& s, const std::string& path, const std::string& header_line);

/// Exact (17 digit) persistence: "<stem>.csv" for eigenvalues and
/// "<stem>.meta" for keys and boundary data.
void save_spectrum(const Spectrum& s, const std::string& stem);
Spectrum load_spectrum(const std::string& stem);

/// Single JSON document with every field; doubles round-trip bit-exactly.
std::string serialize_spectrum(const Spectrum& s);
/// Throws InvalidInput on malformed input.
Spectrum deserialize_spectrum(const std::string& text);

}  // namespace specobs
