#pragma once

#include <optional>
#include <string>
#include <vector>

#include "specobs/errors.hpp"
#include "specobs/geometry.hpp"

namespace specobs::config {

using geometry::Point;

/// One problem found while parsing; line 0 means "whole file".
struct ConfigError {
  int line = 0;
  std::string message;
};

/// All errors of a config file at once.
class ConfigErrors : public InvalidInput {
 public:
  explicit ConfigErrors(std::vector<ConfigError> errors);
  const std::vector<ConfigError>& errors() const { return errors_; }

 private:
  std::vector<ConfigError> errors_;
};

struct ExperimentConfig {
  // [domain]
  std::optional<geometry::ConvexDomain> outer;
  double radius = 0.0;          // 0: no obstacle configured
  std::optional<Point> center;  // single-position subcommands

  // [mesh]
  double h = 0.02;
  double grading = 1.0;
  int N = 100;
  double tol = 1e-9;
  bool consistent_flux = true;
  bool richardson = false;  // spectrum: also solve at 2h and extrapolate

  // [spectra]
  std::vector<double> t_grid{0.05, 0.1, 0.5, 1.0};
  std::vector<double> s_grid;
  double t_split = 1.0;
  double truncation_eps = 1e-8;
  int points_per_decade = 40;

  // [sweep]
  std::vector<Point> path;
  double sweep_slack = 0.0;
  bool mesh_noise = true;

  // [localize]
  double localize_t = 0.5;
  double spacing = 0.0;  // 0: automatic

  // [heart]
  int heart_directions = 256;
  double heart_tol = 0.0;
  double heart_collapse = 0.0;  // merge distance as a fraction of diam(D); 0: off

  // [hadamard]
  Point hadamard_direction{1.0, 0.0};
  double hadamard_eps = 0.0;  // 0: 1e-3 times the outer half-diameter
  std::vector<double> hadamard_times{0.2, 1.0};
  double hadamard_tolerance = 0.05;

  // [run]
  int jobs = 0;  // worker pool size; 0: logical cores

  // [output]
  std::string out_dir = "out";
  std::string cache_dir;  // empty: not configured

  /// SHA-256 of the config text; CSV headers carry it.
  std::string hash;
};

/// Parses the line-oriented grammar:
///
///   # comment
///   [section]
///   key = value
///
/// Every error (unknown section or key, duplicate key, malformed literal,
/// out-of-range value, violated geometric precondition) is collected with
/// its line number and thrown together as ConfigErrors.
ExperimentConfig parse_config(const std::string& text);

/// Reads and parses a file; I/O failures throw InvalidInput.
ExperimentConfig load_config(const std::string& path);

/// Geometry literals: disk(R), disk(R,(cx,cy)), polygon((x1,y1),(x2,y2),...).
/// Throws InvalidInput.
geometry::ConvexDomain parse_domain(const std::string& literal);

/// "(x,y)"
Point parse_point(const std::string& literal);

/// Comma-separated numbers.
std::vector<double> parse_number_list(const std::string& text);

/// Either a list of points "(x,y),(x,y),..." or line((x0,y0),(x1,y1),n)
/// with n >= 2 equally spaced points including both ends.
std::vector<Point> parse_path(const std::string& text);

}  // namespace specobs::config
