#include "specobs/spectrum.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "specobs/errors.hpp"
#include "specobs/format.hpp"
#include "specobs/hash.hpp"

namespace specobs {

Spectrum Spectrum::synthetic(std::vector<double> values, int dimension) {
  if (values.empty()) throw InvalidInput("synthetic spectrum needs at least one value");
  std::sort(values.begin(), values.end());
  if (!(values.front() > 0.0)) throw InvalidInput("eigenvalues must be positive");
  Spectrum s;
  s.eigenvalues = std::move(values);
  s.errors.assign(s.eigenvalues.size(), 0.0);
  s.dimension = dimension;
  s.complete = true;
  std::string literal = "synthetic:";
  for (double v : s.eigenvalues) literal += format_exact(v) + ",";
  s.domain_key = literal;
  s.family_key = literal;
  s.fingerprint = sha256_hex(literal);
  return s;
}

void write_spectrum_csv(const Spectrum& s, const std::string& path, const std::string& header_line) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << header_line << "\nk,lambda,error\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << i + 1 << "," << format_report(s.eigenvalues[i]) << "," << format_report(s.errors[i])
        << "\n";
  }
}

namespace {

using nlohmann::json;

json points_to_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> points_from_json(const json& arr) {
  std::vector<Point> pts;
  for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

}  // namespace

void save_spectrum(const Spectrum& s, const std::string& stem) {
  {
    std::ofstream out(stem + ".csv");
    if (!out) throw InvalidInput("cannot write " + stem + ".csv");
    out << "k,lambda,error\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << i + 1 << "," << format_exact(s.eigenvalues[i]) << "," << format_exact(s.errors[i])
          << "\n";
    }
  }
  json meta;
  meta["dimension"] = s.dimension;
  meta["measure"] = s.measure;
  meta["complete"] = s.complete;
  meta["family_key"] = s.family_key;
  meta["domain_key"] = s.domain_key;
  meta["fingerprint"] = s.fingerprint;
  meta["h"] = s.h;
  if (s.boundary) {
    const BoundaryData& b = *s.boundary;
    meta["boundary"] = {{"midpoints", points_to_json(b.midpoints)},
                        {"normals", points_to_json(b.normals)},
                        {"lengths", b.lengths},
                        {"normal_derivative", b.normal_derivative},
                        {"normalization_error", b.normalization_error}};
  }
  std::ofstream out(stem + ".meta");
  if (!out) throw InvalidInput("cannot write " + stem + ".meta");
  out << meta.dump() << "\n";
}

Spectrum load_spectrum(const std::string& stem) {
  Spectrum s;
  {
    std::ifstream in(stem + ".csv");
    if (!in) throw InvalidInput("cannot read " + stem + ".csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string k;
      std::string lambda;
      std::string err;
      if (!std::getline(row, k, ',') || !std::getline(row, lambda, ',') ||
          !std::getline(row, err, ',')) {
        throw InvalidInput("malformed spectrum row in " + stem + ".csv");
      }
      s.eigenvalues.push_back(std::stod(lambda));
      s.errors.push_back(std::stod(err));
    }
  }
  std::ifstream in(stem + ".meta");
  if (!in) throw InvalidInput("cannot read " + stem + ".meta");
  json meta;
  try {
    meta = json::parse(in);
    s.dimension = meta.at("dimension").get<int>();
    s.measure = meta.at("measure").get<double>();
    s.complete = meta.at("complete").get<bool>();
    s.family_key = meta.at("family_key").get<std::string>();
    s.domain_key = meta.at("domain_key").get<std::string>();
    s.fingerprint = meta.at("fingerprint").get<std::string>();
    s.h = meta.at("h").get<double>();
    if (meta.contains("boundary")) {
      const json& b = meta["boundary"];
      BoundaryData bd;
      bd.midpoints = points_from_json(b.at("midpoints"));
      bd.normals = points_from_json(b.at("normals"));
      bd.lengths = b.at("lengths").get<std::vector<double>>();
      bd.normal_derivative = b.at("normal_derivative").get<std::vector<std::vector<double>>>();
      bd.normalization_error = b.at("normalization_error").get<std::vector<double>>();
      s.boundary = std::move(bd);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("malformed spectrum metadata in " + stem + ".meta: " + e.what());
  }
  return s;
}

std::string serialize_spectrum(const Spectrum& s) {
  json doc;
  doc["eigenvalues"] = s.eigenvalues;
  doc["errors"] = s.errors;
  doc["dimension"] = s.dimension;
  doc["measure"] = s.measure;
  doc["complete"] = s.complete;
  doc["family_key"] = s.family_key;
  doc["domain_key"] = s.domain_key;
  doc["fingerprint"] = s.fingerprint;
  doc["h"] = s.h;
  if (s.boundary) {
    const BoundaryData& b = *s.boundary;
    doc["boundary"] = {{"midpoints", points_to_json(b.midpoints)},
                       {"normals", points_to_json(b.normals)},
                       {"lengths", b.lengths},
                       {"normal_derivative", b.normal_derivative},
                       {"normalization_error", b.normalization_error}};
  }
  return doc.dump();
}

Spectrum deserialize_spectrum(const std::string& text) {
  Spectrum s;
  try {
    const json doc = json::parse(text);
    s.eigenvalues = doc.at("eigenvalues").get<std::vector<double>>();
    s.errors = doc.at("errors").get<std::vector<double>>();
    s.dimension = doc.at("dimension").get<int>();
    s.measure = doc.at("measure").get<double>();
    s.complete = doc.at("complete").get<bool>();
    s.family_key = doc.at("family_key").get<std::string>();
    s.domain_key = doc.at("domain_key").get<std::string>();
    s.fingerprint = doc.at("fingerprint").get<std::string>();
    s.h = doc.at("h").get<double>();
    if (doc.contains("boundary")) {
      const json& b = doc["boundary"];
      BoundaryData bd;
      bd.midpoints = points_from_json(b.at("midpoints"));
      bd.normals = points_from_json(b.at("normals"));
      bd.lengths = b.at("lengths").get<std::vector<double>>();
      bd.normal_derivative = b.at("normal_derivative").get<std::vector<std::vector<double>>>();
      bd.normalization_error = b.at("normalization_error").get<std::vector<double>>();
      s.boundary = std::move(bd);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed spectrum document: ") + e.what());
  }
  if (s.eigenvalues.size() != s.errors.size()) {
    throw InvalidInput("malformed spectrum document: eigenvalue and error counts differ");
  }
  return s;
}

}  // namespace specobs
