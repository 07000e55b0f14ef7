#pragma once

#include <string>

namespace specobs {

/// Shortest decimal representation that round-trips to the same double.
std::string format_number(double value);

/// Fifteen significant digits, used for all report CSV output.
std::string format_report(double value);

/// Seventeen significant digits; round-trips exactly (cache files).
std::string format_exact(double value);

}  // namespace specobs
