#pragma once

#include <string>
#include <string_view>

namespace specobs {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Version tag mixed into every cache key and CSV header.
inline constexpr const char* kCodeVersion = "specobs-1.0.0";

}  // namespace specobs
