#pragma once

#include <stdexcept>
#include <string>

namespace specobs {

/// Input that violates a documented precondition (bad geometry, bad
/// parameters, mismatched spectra).  Maps to exit code 2 in the CLI.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not reach its stated accuracy (eigensolver
/// stagnation, exceeded error budget).  Maps to exit code 3 in the CLI.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace specobs
