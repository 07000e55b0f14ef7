#include "specobs/format.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace specobs {

std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

std::string format_report(double value) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.15g", value);
  return buf.data();
}

std::string format_exact(double value) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return buf.data();
}

}  // namespace specobs
