#include "specobs/cache.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "specobs/errors.hpp"
#include "specobs/format.hpp"
#include "specobs/hash.hpp"

namespace specobs::cache {

namespace fs = std::filesystem;

namespace {

double round_1e12(double v) {
  const double r = std::round(v * 1e12) / 1e12;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomically(const std::string& path, const std::string& bytes) {
  static std::atomic<unsigned long> counter{0};
  const std::string tmp = path + ".tmp." +
                          std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                          "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write cache file " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("cannot write cache file " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InvalidInput("cannot move cache file into place: " + path);
  }
}

}  // namespace

std::string key_text(const KeyFields& f) {
  std::ostringstream out;
  out << "domain=" << f.domain_literal << ";center=(" << format_number(round_1e12(f.center.x))
      << "," << format_number(round_1e12(f.center.y)) << ");r=" << format_number(f.radius)
      << ";h=" << format_number(f.h) << ";grading=" << format_number(f.grading) << ";N=" << f.N
      << ";tol=" << format_number(f.tol) << ";variant=" << f.variant
      << ";flux=" << (f.consistent_flux ? "consistent" : "triangle")
      << ";boundary=" << (f.boundary_data ? 1 : 0) << ";version=" << kCodeVersion;
  return out.str();
}

std::string cache_key(const KeyFields& fields) { return sha256_hex(key_text(fields)); }

SpectrumCache::SpectrumCache(std::string directory) : dir_(std::move(directory)) {
  if (!enabled()) return;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw InvalidInput("cannot create cache directory " + dir_);
}

std::string SpectrumCache::document_path(const std::string& key) const {
  return (fs::path(dir_) / (key + ".json")).string();
}

std::string SpectrumCache::checksum_path(const std::string& key) const {
  return (fs::path(dir_) / (key + ".sha256")).string();
}

std::optional<Spectrum> SpectrumCache::load(const std::string& key, bool* corrupt) const {
  if (corrupt) *corrupt = false;
  if (!enabled()) return std::nullopt;
  const auto doc = read_file(document_path(key));
  if (!doc) return std::nullopt;
  const auto sum = read_file(checksum_path(key));
  auto bad = [&] {
    if (corrupt) *corrupt = true;
    return std::nullopt;
  };
  if (!sum) return bad();
  std::string expected = *sum;
  while (!expected.empty() && std::isspace(static_cast<unsigned char>(expected.back()))) expected.pop_back();
  if (expected != sha256_hex(*doc)) return bad();
  try {
    return deserialize_spectrum(*doc);
  } catch (const InvalidInput&) {
    return bad();
  }
}

void SpectrumCache::store(const std::string& key, const Spectrum& spectrum) const {
  if (!enabled()) return;
  const std::string doc = serialize_spectrum(spectrum);
  write_atomically(document_path(key), doc);
  write_atomically(checksum_path(key), sha256_hex(doc) + "\n");
}

}  // namespace specobs::cache
