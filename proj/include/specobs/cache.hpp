#pragma once

#include <optional>
#include <string>

#include "specobs/geometry.hpp"
#include "specobs/spectrum.hpp"

namespace specobs::cache {

/// Everything that determines a mesh-based spectrum.
struct KeyFields {
  std::string domain_literal;  // canonical ConvexDomain::literal()
  geometry::Point center;      // rounded to 1e-12 when hashed
  double radius = 0.0;
  double h = 0.0;
  double grading = 1.0;
  int N = 0;
  double tol = 0.0;
  /// Mesh realization and flux recovery; both change the stored data.
  int variant = 0;
  bool consistent_flux = true;
  bool boundary_data = true;
};

/// Canonical text of the fields (with the code version tag).
std::string key_text(const KeyFields& fields);
/// 64 hex digits: SHA-256 of key_text.
std::string cache_key(const KeyFields& fields);

/// Directory of "<key>.json" documents, each with a "<key>.sha256" sidecar
/// holding the digest of the document bytes.  Writes go to a temporary name
/// and are renamed into place, so readers never see partial files.
class SpectrumCache {
 public:
  /// An empty directory disables the cache.
  explicit SpectrumCache(std::string directory);

  bool enabled() const { return !dir_.empty(); }
  const std::string& directory() const { return dir_; }

  /// The stored spectrum, or nothing when absent.  A checksum mismatch or an
  /// unreadable document counts as absent and sets `corrupt`.
  std::optional<Spectrum> load(const std::string& key, bool* corrupt = nullptr) const;
  void store(const std::string& key, const Spectrum& spectrum) const;

  std::string document_path(const std::string& key) const;
  std::string checksum_path(const std::string& key) const;

 private:
  std::string dir_;
};

}  // namespace specobs::cache
