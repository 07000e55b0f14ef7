#include "specobs/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string_view>

#include "specobs/errors.hpp"
#include "specobs/format.hpp"
#include "specobs/hash.hpp"

namespace specobs::config {

namespace {

std::string join_errors(const std::vector<ConfigError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "\n";
    out += e.line > 0 ? "line " + std::to_string(e.line) + ": " + e.message : e.message;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// Recursive-descent reader for the literal grammar.
class Cursor {
 public:
  explicit Cursor(std::string_view text) : s_(text) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }
  double number() {
    skip_ws();
    double v = 0.0;
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || !std::isfinite(v)) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return v;
  }
  Point point() {
    expect('(');
    const double x = number();
    expect(',');
    const double y = number();
    expect(')');
    return {x, y};
  }
  void finish() {
    if (!at_end()) fail("unexpected trailing text");
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidInput(what + " at column " + std::to_string(pos_ + 1) + " in '" +
                       std::string(s_) + "'");
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

double parse_number(const std::string& text) {
  Cursor c(text);
  const double v = c.number();
  c.finish();
  return v;
}

int parse_int(const std::string& text) {
  const double v = parse_number(text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw InvalidInput("expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& text) {
  std::string v(trim(text));
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw InvalidInput("expected true or false, got '" + text + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidInput(message);
}

Point centroid_of(const geometry::ConvexDomain& d) {
  if (d.is_disk()) return d.as_disk().center;
  return geometry::polygon_centroid(d.vertices());
}

}  // namespace

ConfigErrors::ConfigErrors(std::vector<ConfigError> errors)
    : InvalidInput(join_errors(errors)), errors_(std::move(errors)) {}

geometry::ConvexDomain parse_domain(const std::string& literal) {
  Cursor c(literal);
  const std::string kind = c.ident();
  c.expect('(');
  if (kind == "disk") {
    const double R = c.number();
    Point center;
    if (c.accept(',')) center = c.point();
    c.expect(')');
    c.finish();
    if (!(R > 0.0)) throw InvalidInput("disk radius must be positive in '" + literal + "'");
    return geometry::ConvexDomain::disk(center, R);
  }
  if (kind == "polygon") {
    std::vector<Point> v{c.point()};
    while (c.accept(',')) v.push_back(c.point());
    c.expect(')');
    c.finish();
    return geometry::ConvexDomain::polygon(std::move(v));
  }
  throw InvalidInput("unknown domain '" + kind + "' (expected disk or polygon)");
}

Point parse_point(const std::string& literal) {
  Cursor c(literal);
  const Point p = c.point();
  c.finish();
  return p;
}

std::vector<double> parse_number_list(const std::string& text) {
  Cursor c(text);
  std::vector<double> v{c.number()};
  while (c.accept(',')) v.push_back(c.number());
  c.finish();
  return v;
}

std::vector<Point> parse_path(const std::string& text) {
  Cursor c(text);
  if (c.peek('(')) {
    std::vector<Point> v{c.point()};
    while (c.accept(',')) v.push_back(c.point());
    c.finish();
    return v;
  }
  const std::string kind = c.ident();
  if (kind != "line") throw InvalidInput("path must be a point list or line(...)");
  c.expect('(');
  const Point a = c.point();
  c.expect(',');
  const Point b = c.point();
  c.expect(',');
  const double n = c.number();
  c.expect(')');
  c.finish();
  if (n < 2 || n != std::floor(n) || n > 100000) {
    throw InvalidInput("line(...) needs an integer point count >= 2");
  }
  const int count = static_cast<int>(n);
  std::vector<Point> v;
  for (int i = 0; i < count; ++i) {
    const double s = static_cast<double>(i) / (count - 1);
    v.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)});
  }
  return v;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.hash = sha256_hex(text);
  std::vector<ConfigError> errors;
  // Line numbers of keys that took part in validation.
  std::map<std::string, int> seen;
  auto line_of = [&](const std::string& key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  };

  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, std::map<std::string, Setter>> table{
      {"domain",
       {{"outer", [&](const std::string& v) { cfg.outer = parse_domain(v); }},
        {"radius",
         [&](const std::string& v) {
           cfg.radius = parse_number(v);
           require(cfg.radius > 0.0, "radius must be positive");
         }},
        {"center", [&](const std::string& v) { cfg.center = parse_point(v); }}}},
      {"mesh",
       {{"h",
         [&](const std::string& v) {
           cfg.h = parse_number(v);
           require(cfg.h > 0.0, "h must be positive");
         }},
        {"grading",
         [&](const std::string& v) {
           cfg.grading = parse_number(v);
           require(cfg.grading > 0.0 && cfg.grading <= 1.0, "grading must be in (0, 1]");
         }},
        {"N",
         [&](const std::string& v) {
           cfg.N = parse_int(v);
           require(cfg.N >= 1, "N must be at least 1");
         }},
        {"tol",
         [&](const std::string& v) {
           cfg.tol = parse_number(v);
           require(cfg.tol > 0.0 && cfg.tol < 1e-2, "tol must be in (0, 1e-2)");
         }},
        {"flux",
         [&](const std::string& v) {
           const std::string f(trim(v));
           require(f == "consistent" || f == "triangle", "flux must be consistent or triangle");
           cfg.consistent_flux = f == "consistent";
         }},
        {"richardson", [&](const std::string& v) { cfg.richardson = parse_bool(v); }}}},
      {"spectra",
       {{"t_grid",
         [&](const std::string& v) {
           cfg.t_grid = parse_number_list(v);
           for (double t : cfg.t_grid) require(t > 0.0, "heat times must be positive");
         }},
        {"s_grid",
         [&](const std::string& v) {
           cfg.s_grid = parse_number_list(v);
           for (double s : cfg.s_grid) require(s > 0.0, "zeta arguments must be positive");
         }},
        {"t_split",
         [&](const std::string& v) {
           cfg.t_split = parse_number(v);
           require(cfg.t_split > 0.0, "t_split must be positive");
         }},
        {"eps",
         [&](const std::string& v) {
           cfg.truncation_eps = parse_number(v);
           require(cfg.truncation_eps > 0.0 && cfg.truncation_eps < 1.0, "eps must be in (0, 1)");
         }},
        {"points_per_decade",
         [&](const std::string& v) {
           cfg.points_per_decade = parse_int(v);
           require(cfg.points_per_decade >= 4, "points_per_decade must be at least 4");
         }}}},
      {"sweep",
       {{"path", [&](const std::string& v) { cfg.path = parse_path(v); }},
        {"slack",
         [&](const std::string& v) {
           cfg.sweep_slack = parse_number(v);
           require(cfg.sweep_slack >= 0.0, "slack must be nonnegative");
         }},
        {"mesh_noise", [&](const std::string& v) { cfg.mesh_noise = parse_bool(v); }}}},
      {"localize",
       {{"t",
         [&](const std::string& v) {
           cfg.localize_t = parse_number(v);
           require(cfg.localize_t > 0.0, "t must be positive");
         }},
        {"spacing",
         [&](const std::string& v) {
           cfg.spacing = parse_number(v);
           require(cfg.spacing >= 0.0, "spacing must be nonnegative");
         }}}},
      {"heart",
       {{"directions",
         [&](const std::string& v) {
           cfg.heart_directions = parse_int(v);
           require(cfg.heart_directions >= 8, "directions must be at least 8");
         }},
        {"tol",
         [&](const std::string& v) {
           cfg.heart_tol = parse_number(v);
           require(cfg.heart_tol >= 0.0, "tol must be nonnegative");
         }},
        {"collapse",
         [&](const std::string& v) {
           cfg.heart_collapse = parse_number(v);
           require(cfg.heart_collapse >= 0.0 && cfg.heart_collapse < 0.5,
                   "collapse must be in [0, 0.5)");
         }}}},
      {"hadamard",
       {{"direction",
         [&](const std::string& v) {
           const Point p = parse_point(v);
           require(geometry::norm(p) > 0.0, "direction must be nonzero");
           cfg.hadamard_direction = (1.0 / geometry::norm(p)) * p;
         }},
        {"eps",
         [&](const std::string& v) {
           cfg.hadamard_eps = parse_number(v);
           require(cfg.hadamard_eps > 0.0, "eps must be positive");
         }},
        {"times",
         [&](const std::string& v) {
           cfg.hadamard_times = parse_number_list(v);
           for (double t : cfg.hadamard_times) require(t > 0.0, "heat times must be positive");
         }},
        {"tolerance",
         [&](const std::string& v) {
           cfg.hadamard_tolerance = parse_number(v);
           require(cfg.hadamard_tolerance > 0.0, "tolerance must be positive");
         }}}},
      {"run",
       {{"jobs",
         [&](const std::string& v) {
           cfg.jobs = parse_int(v);
           require(cfg.jobs >= 0, "jobs must be nonnegative");
         }}}},
      {"output",
       {{"out", [&](const std::string& v) { cfg.out_dir = std::string(trim(v)); }},
        {"cache", [&](const std::string& v) { cfg.cache_dir = std::string(trim(v)); }}}},
  };

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::string section;
  bool section_known = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back({line_no, "malformed section header"});
        section.clear();
        section_known = false;
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      section_known = table.count(section) > 0;
      if (!section_known) errors.push_back({line_no, "unknown section [" + section + "]"});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      errors.push_back({line_no, "expected key = value"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (section.empty()) {
      errors.push_back({line_no, "key '" + key + "' outside any section"});
      continue;
    }
    if (!section_known) continue;
    const std::string full = section + "." + key;
    const auto& keys = table.at(section);
    const auto setter = keys.find(key);
    if (setter == keys.end()) {
      errors.push_back({line_no, "unknown key '" + key + "' in [" + section + "]"});
      continue;
    }
    if (const auto prev = seen.find(full); prev != seen.end()) {
      errors.push_back({line_no, "duplicate key '" + full + "' (lines " +
                                     std::to_string(prev->second) + " and " +
                                     std::to_string(line_no) + ")"});
      continue;
    }
    seen[full] = line_no;
    if (value.empty()) {
      errors.push_back({line_no, "empty value for '" + full + "'"});
      continue;
    }
    try {
      setter->second(value);
    } catch (const InvalidInput& e) {
      errors.push_back({line_no, full + ": " + e.what()});
    }
  }

  // Cross-field preconditions.
  if (!cfg.outer) {
    if (!seen.count("domain.outer")) errors.push_back({0, "missing [domain] outer"});
  } else {
    const auto& D = *cfg.outer;
    if (cfg.radius > 0.0) {
      if (!cfg.center) cfg.center = centroid_of(D);
      const double dist = D.boundary_distance(*cfg.center);
      if (!(dist > cfg.radius)) {
        const int line = line_of("domain.center") ? line_of("domain.center") : line_of("domain.radius");
        errors.push_back({line, "obstacle violates dist(center, boundary of D) > r: dist = " +
                                    format_number(dist) + ", r = " + format_number(cfg.radius)});
      } else if (!(dist - cfg.radius > cfg.h)) {
        errors.push_back({line_of("domain.radius"),
                          "obstacle clearance " + format_number(dist - cfg.radius) +
                              " must exceed the mesh size h = " + format_number(cfg.h)});
      }
      const double h_max = cfg.richardson ? 2.0 * cfg.h : cfg.h;
      if (!(h_max < cfg.radius / 4.0)) {
        errors.push_back({line_of("mesh.h") ? line_of("mesh.h") : line_of("domain.radius"),
                          "mesh size " + format_number(h_max) +
                              " violates h < r/4 for obstacle radius r = " + format_number(cfg.radius)});
      }
      for (std::size_t i = 0; i < cfg.path.size(); ++i) {
        const double c = D.boundary_distance(cfg.path[i]) - cfg.radius;
        if (!(c > cfg.h)) {
          errors.push_back({line_of("sweep.path"),
                            "path point " + std::to_string(i) + " (" + format_number(cfg.path[i].x) +
                                "," + format_number(cfg.path[i].y) +
                                ") violates dist(center, boundary of D) > r + h: clearance " +
                                format_number(c)});
        }
      }
    } else if (!cfg.path.empty() || seen.count("domain.center")) {
      errors.push_back({line_of("sweep.path") ? line_of("sweep.path") : line_of("domain.center"),
                        "obstacle positions given without [domain] radius"});
    }
    if (cfg.h >= 0.5 * D.diameter()) {
      errors.push_back({line_of("mesh.h"), "h must be smaller than half the diameter of D"});
    }
  }
  if (!errors.empty()) {
    std::stable_sort(errors.begin(), errors.end(),
                     [](const ConfigError& a, const ConfigError& b) { return a.line < b.line; });
    throw ConfigErrors(std::move(errors));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace specobs::config
