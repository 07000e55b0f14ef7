#include "specobs/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>

#include "specobs/cache.hpp"
#include "specobs/config.hpp"
#include "specobs/eigensolver.hpp"
#include "specobs/errors.hpp"
#include "specobs/format.hpp"
#include "specobs/hash.hpp"
#include "specobs/mesher.hpp"
#include "specobs/parallel.hpp"
#include "specobs/spectra.hpp"
#include "specobs/variation.hpp"

namespace specobs::cli {

namespace fs = std::filesystem;
using geometry::ObstacleDomain;
using geometry::Point;

namespace {

struct Flags {
  std::string config;
  bool plot = false;
  int jobs = -1;  // unset
  std::string cache;
  std::string out;
  std::vector<std::string> positional;  // oracle arguments
};

class Context {
 public:
  Context(config::ExperimentConfig cfg, const Flags& flags, std::ostream& out, std::ostream& err)
      : cfg_(std::move(cfg)), out_(out), err_(err), cache_(resolve_cache(flags, cfg_)) {
    out_dir_ = flags.out.empty() ? cfg_.out_dir : flags.out;
    jobs_ = resolve_jobs(flags.jobs >= 0 ? flags.jobs : cfg_.jobs);
    plot_ = flags.plot;
    header_ = std::string("# version=") + kCodeVersion + " config=" + cfg_.hash;
  }

  const config::ExperimentConfig& cfg() const { return cfg_; }
  std::ostream& out() { return out_; }
  int jobs() const { return jobs_; }
  bool plot() const { return plot_; }
  const std::string& header() const { return header_; }

  std::string output(const std::string& name) {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw InvalidInput("cannot create output directory " + out_dir_);
    return (fs::path(out_dir_) / name).string();
  }

  void warn(const std::string& message) {
    const std::lock_guard<std::mutex> lock(mutex_);
    err_ << "warning: " << message << "\n";
  }

  fem::SolverOptions solver(bool boundary) const {
    fem::SolverOptions o;
    o.tol = cfg_.tol;
    o.boundary_data = boundary;
    o.flux = cfg_.consistent_flux ? fem::FluxMethod::Consistent : fem::FluxMethod::TriangleGradient;
    return o;
  }

  spectra::ZetaOptions zeta_options() const {
    spectra::ZetaOptions o;
    o.t_split = cfg_.t_split;
    o.eps = cfg_.truncation_eps;
    o.points_per_decade = cfg_.points_per_decade;
    return o;
  }

  /// Cached mesh spectrum of D minus B(center, r) at mesh size h.
  variation::SpectrumProvider provider(double h, bool boundary) {
    return [this, h, boundary](const ObstacleDomain& d, int variant) {
      cache::KeyFields f;
      f.domain_literal = d.outer.literal();
      f.center = d.center;
      f.radius = d.radius;
      f.h = h;
      f.grading = cfg_.grading;
      f.N = cfg_.N;
      f.tol = cfg_.tol;
      f.variant = variant;
      f.consistent_flux = cfg_.consistent_flux;
      f.boundary_data = boundary;
      return cached(cache::cache_key(f), [&] {
        return variation::mesh_provider(h, cfg_.grading, cfg_.N, solver(boundary))(d, variant);
      });
    };
  }

  /// Cached spectrum of D itself (no obstacle).
  Spectrum outer_spectrum(double h) {
    cache::KeyFields f;
    f.domain_literal = cfg_.outer->literal();
    f.h = h;
    f.N = cfg_.N;
    f.tol = cfg_.tol;
    f.boundary_data = false;
    return cached(cache::cache_key(f), [&] {
      return fem::assemble_and_solve(mesh::mesh_domain(*cfg_.outer, h), cfg_.N, solver(false));
    });
  }

  /// Spectrum at the configured position and mesh size.
  Spectrum spectrum_at(double h, bool boundary) {
    if (cfg_.radius > 0.0) return provider(h, boundary)(domain(), 0);
    return outer_spectrum(h);
  }

  ObstacleDomain domain() const {
    if (!(cfg_.radius > 0.0)) throw InvalidInput("this subcommand needs [domain] radius");
    return ObstacleDomain::make(*cfg_.outer, *cfg_.center, cfg_.radius);
  }

  spectra::AsymptoticCoefficients coefficients() const {
    if (cfg_.radius > 0.0) return spectra::asymptotic_coefficients(domain());
    return spectra::asymptotic_coefficients(*cfg_.outer);
  }

  void report_counts() {
    err_ << "eigensolves: " << solves_.load() << ", cache hits: " << hits_.load() << "\n";
  }

 private:
  static std::string resolve_cache(const Flags& flags, const config::ExperimentConfig& cfg) {
    if (!flags.cache.empty()) return flags.cache;
    if (const char* env = std::getenv(kCacheEnv); env != nullptr && *env != '\0') return env;
    return cfg.cache_dir;
  }

  template <typename Compute>
  Spectrum cached(const std::string& key, Compute compute) {
    bool corrupt = false;
    if (auto hit = cache_.load(key, &corrupt)) {
      ++hits_;
      return *hit;
    }
    if (corrupt) warn("cache entry " + key + " failed its checksum; recomputing");
    Spectrum s = compute();
    ++solves_;
    cache_.store(key, s);
    return s;
  }

  config::ExperimentConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
  cache::SpectrumCache cache_;
  std::string out_dir_;
  int jobs_ = 1;
  bool plot_ = false;
  std::string header_;
  std::mutex mutex_;
  std::atomic<int> solves_{0};
  std::atomic<int> hits_{0};
};

std::ofstream open_csv(Context& ctx, const std::string& name) {
  const std::string path = ctx.output(name);
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << ctx.header() << "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_heart(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& D = *cfg.outer;
  auto heart = geometry::compute_heart(D, cfg.heart_directions, cfg.heart_tol);
  std::vector<Point> vertices = heart.vertices;
  if (cfg.heart_collapse > 0.0 && vertices.size() >= 3) {
    vertices = geometry::collapse_polygon(vertices, cfg.heart_collapse * D.diameter(), 0.0);
  }
  auto csv = open_csv(ctx, "heart.csv");
  csv << "x,y\n";
  for (const Point& v : vertices) csv << format_report(v.x) << "," << format_report(v.y) << "\n";
  const geometry::HeartPolygon shown{vertices, heart.direction_count};
  csv << "# directions " << cfg.heart_directions << " vertices " << vertices.size() << "\n";
  ctx.out() << "heart: " << vertices.size() << (vertices.size() == 1 ? " vertex" : " vertices")
            << ", diameter " << format_report(shown.diameter()) << ", centroid ("
            << format_report(shown.centroid().x) << "," << format_report(shown.centroid().y)
            << ")\n";
  if (ctx.plot()) {
    variation::LocalizationReport rep;
    rep.heart = shown;
    rep.centers = {shown.centroid()};
    rep.Z = {0.0};
    rep.spacing = 0.0;
    variation::write_localization_svg(rep, D, ctx.output("heart.svg"));
  }
  return kPass;
}

int cmd_spectrum(Context& ctx) {
  const auto& cfg = ctx.cfg();
  Spectrum s = ctx.spectrum_at(cfg.h, false);
  if (cfg.richardson) s = fem::richardson_extrapolate(ctx.spectrum_at(2.0 * cfg.h, false), s);
  write_spectrum_csv(s, ctx.output("spectrum.csv"), ctx.header());
  ctx.out() << "lambda_1 = " << format_report(s.eigenvalues.front()) << " (error "
            << format_report(s.errors.front()) << "), " << s.size() << " eigenvalues\n";
  return kPass;
}

int cmd_trace(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const Spectrum s = ctx.spectrum_at(cfg.h, false);
  auto csv = open_csv(ctx, "trace.csv");
  csv << "t,Z,Z_err,truncation_bound\n";
  for (double t : cfg.t_grid) {
    const auto z = spectra::heat_trace(s, t);
    double err = z.truncation_bound;
    for (std::size_t k = 0; k < s.size(); ++k) err += t * std::exp(-s.eigenvalues[k] * t) * s.errors[k];
    csv << format_report(t) << "," << format_report(z.value) << "," << format_report(err) << ","
        << format_report(z.truncation_bound) << "\n";
    ctx.out() << "Z(" << format_report(t) << ") = " << format_report(z.value) << "\n";
  }
  return kPass;
}

const char* branch_name(spectra::ZetaBranch b) {
  switch (b) {
    case spectra::ZetaBranch::Direct:
      return "direct";
    case spectra::ZetaBranch::Mellin:
      return "mellin";
    case spectra::ZetaBranch::Auto:
      break;
  }
  return "auto";
}

int cmd_zeta(Context& ctx) {
  const auto& cfg = ctx.cfg();
  if (cfg.s_grid.empty()) throw InvalidInput("zeta needs [spectra] s_grid");
  const Spectrum s = ctx.spectrum_at(cfg.h, false);
  const auto coeffs = ctx.coefficients();
  auto csv = open_csv(ctx, "zeta.csv");
  csv << "s,zeta,error,branch\n";
  for (double x : cfg.s_grid) {
    const auto z = spectra::zeta(s, coeffs, x, spectra::ZetaBranch::Auto, ctx.zeta_options());
    csv << format_report(z.s) << "," << format_report(z.value) << "," << format_report(z.error)
        << "," << branch_name(z.branch) << "\n";
    ctx.out() << "zeta(" << format_report(x) << ") = " << format_report(z.value) << " +- "
              << format_report(z.error) << " [" << branch_name(z.branch) << "]\n";
  }
  return kPass;
}

int cmd_det(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const Spectrum s = ctx.spectrum_at(cfg.h, false);
  const auto rep =
      spectra::zeta_prime_zero_and_det(s, ctx.coefficients(), cfg.s_grid, ctx.zeta_options());
  spectra::write_report_csv(rep, ctx.output("det.csv"), ctx.header());
  ctx.out() << "zeta'(0) = " << format_report(rep.zeta_prime_zero) << " +- "
            << format_report(rep.zeta_prime_zero_error) << "\n"
            << "det = " << format_report(rep.determinant) << " +- "
            << format_report(rep.determinant_error) << "\n";
  return kPass;
}

std::string check_line(const std::string& what, const variation::MonotoneReport& r) {
  return "# " + what + ": " + (r.pass ? "PASS" : "FAIL") + " margin=" + format_report(r.margin) +
         " certified=" + (r.certified ? "yes" : "no") + "\n";
}

void margin_table(std::ostream& out, const std::string& what, const variation::MonotoneReport& r) {
  out << what << "\nstep,signed_step,error\n";
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    out << i + 1 << "," << format_report(r.steps[i]) << "," << format_report(r.errors[i]) << "\n";
  }
}

int cmd_sweep(Context& ctx, std::ostream& err) {
  const auto& cfg = ctx.cfg();
  if (cfg.path.size() < 2) throw InvalidInput("sweep needs a [sweep] path with at least 2 points");
  if (!(cfg.radius > 0.0)) throw InvalidInput("sweep needs [domain] radius");
  variation::SweepOptions opts;
  opts.jobs = ctx.jobs();
  opts.mesh_noise = cfg.mesh_noise;
  const auto result = variation::sweep(*cfg.outer, cfg.radius, cfg.path, cfg.t_grid, cfg.h,
                                       ctx.provider(cfg.h, false), opts);
  using variation::Direction;
  using variation::Quantity;
  std::vector<std::pair<std::string, variation::MonotoneReport>> checks;
  for (std::size_t k = 0; k < cfg.t_grid.size(); ++k) {
    checks.emplace_back("Z(t=" + format_number(cfg.t_grid[k]) + ") nondecreasing",
                        variation::verify_monotone(result, Quantity::Z, Direction::Nondecreasing,
                                                   cfg.sweep_slack, k));
  }
  checks.emplace_back("lambda1 nonincreasing",
                      variation::verify_monotone(result, Quantity::Lambda1,
                                                 Direction::Nonincreasing, cfg.sweep_slack));
  checks.emplace_back("det decreasing",
                      variation::verify_monotone(result, Quantity::Det, Direction::Nonincreasing,
                                                 cfg.sweep_slack));
  std::string footer;
  bool pass = true;
  for (const auto& [what, r] : checks) {
    footer += check_line(what, r);
    pass = pass && r.pass;
  }
  footer += std::string("# monotonicity: ") + (pass ? "PASS" : "FAIL") + "\n";
  variation::write_sweep_csv(result, ctx.output("sweep.csv"), ctx.header(), footer);
  if (ctx.plot()) variation::write_sweep_svg(result, ctx.output("sweep.svg"));
  ctx.out() << footer;
  if (!pass) {
    for (const auto& [what, r] : checks) {
      if (!r.pass) margin_table(err, what, r);
    }
    return kVerificationFailed;
  }
  return kPass;
}

int cmd_localize(Context& ctx) {
  const auto& cfg = ctx.cfg();
  if (!(cfg.radius > 0.0)) throw InvalidInput("localize needs [domain] radius");
  variation::LocalizationOptions opts;
  opts.heart_directions = cfg.heart_directions;
  opts.spacing = cfg.spacing;
  opts.h = cfg.h;
  opts.jobs = ctx.jobs();
  const auto rep = variation::heart_localization(*cfg.outer, cfg.radius, cfg.localize_t,
                                                 ctx.provider(cfg.h, false), opts);
  variation::write_localization_csv(rep, ctx.output("localization.csv"), ctx.header());
  if (ctx.plot()) variation::write_localization_svg(rep, *cfg.outer, ctx.output("localization.svg"));
  const bool pass = rep.argmin_near_heart && (rep.argmax_on_shell || rep.argmax_in_heart);
  const Point mn = rep.centers[rep.argmin];
  const Point mx = rep.centers[rep.argmax];
  ctx.out() << "centers: " << rep.centers.size() << ", spacing " << format_report(rep.spacing)
            << "\nargmin (" << format_report(mn.x) << "," << format_report(mn.y)
            << "), distance to heart " << format_report(rep.argmin_distance_to_heart) << ": "
            << (rep.argmin_near_heart ? "PASS" : "FAIL") << "\nargmax (" << format_report(mx.x)
            << "," << format_report(mx.y) << "), "
            << (rep.argmax_in_heart ? "interior of heart"
                                    : rep.argmax_on_shell ? "outermost shell" : "neither")
            << ": " << (rep.argmax_on_shell || rep.argmax_in_heart ? "PASS" : "FAIL") << "\n";
  return pass ? kPass : kVerificationFailed;
}

int cmd_hadamard(Context& ctx, std::ostream& err) {
  const auto& cfg = ctx.cfg();
  const ObstacleDomain d = ctx.domain();
  variation::HadamardOptions opts;
  opts.h = cfg.h;
  opts.grading = cfg.grading;
  opts.N = cfg.N;
  opts.eps = cfg.hadamard_eps > 0.0 ? cfg.hadamard_eps : 1e-3 * 0.5 * cfg.outer->diameter();
  opts.solver = ctx.solver(true);
  const auto checks = variation::hadamard_check(d, cfg.hadamard_times, cfg.hadamard_direction, opts);
  variation::write_hadamard_csv(checks, ctx.output("hadamard.csv"), ctx.header());
  // Moving away from the heart should increase Z.
  const Point heart = geometry::compute_heart(*cfg.outer, cfg.heart_directions).centroid();
  const bool outward = dot(cfg.hadamard_direction, d.center - heart) > 0.0;
  bool pass = true;
  for (const auto& c : checks) {
    const bool close = c.relative_gap <= cfg.hadamard_tolerance;
    const bool positive = !outward || (c.boundary_integral > 0.0 && c.finite_difference > 0.0);
    pass = pass && close && positive;
    ctx.out() << "t=" << format_report(c.t) << " boundary=" << format_report(c.boundary_integral)
              << " fd=" << format_report(c.finite_difference)
              << " gap=" << format_report(c.relative_gap) << " " << (close ? "PASS" : "FAIL");
    if (outward) ctx.out() << " sign " << (positive ? "PASS" : "FAIL");
    ctx.out() << "\n";
  }
  if (!pass) err << "hadamard check failed (tolerance " << format_report(cfg.hadamard_tolerance) << ")\n";
  return pass ? kPass : kVerificationFailed;
}

/// oracle <interval|rectangle|disk|annulus> key=value... [spectrum|trace|zeta|det]...
int cmd_oracle(const Flags& flags, std::ostream& out) {
  const auto& args = flags.positional;
  if (args.empty()) throw InvalidInput("oracle needs a kind: interval, rectangle, disk or annulus");
  const std::string& kind = args.front();
  std::map<std::string, std::string> kv;
  std::vector<std::string> quantities;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto eq = args[i].find('=');
    if (eq == std::string::npos) {
      quantities.push_back(args[i]);
    } else {
      kv[args[i].substr(0, eq)] = args[i].substr(eq + 1);
    }
  }
  auto number = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InvalidInput("oracle " + kind + " needs " + key + "=...");
    const auto v = config::parse_number_list(it->second);
    if (v.size() != 1) throw InvalidInput(key + " must be a single number");
    return v.front();
  };
  const double n_value = number("N");
  if (n_value < 1 || n_value != std::floor(n_value) || n_value > 1e7) {
    throw InvalidInput("N must be a positive integer");
  }
  const int N = static_cast<int>(n_value);
  fem::OracleSpec spec;
  spectra::AsymptoticCoefficients coeffs;
  if (kind == "interval") {
    spec = fem::OracleSpec::interval(number("L"), N);
    coeffs = spectra::interval_coefficients(spec.a);
  } else if (kind == "rectangle") {
    spec = fem::OracleSpec::rectangle(number("a"), number("b"), N);
    coeffs = spectra::asymptotic_coefficients(geometry::ConvexDomain::polygon(
        {{0.0, 0.0}, {spec.a, 0.0}, {spec.a, spec.b}, {0.0, spec.b}}));
  } else if (kind == "disk") {
    spec = fem::OracleSpec::disk(number("R"), N);
    coeffs = spectra::asymptotic_coefficients(geometry::ConvexDomain::disk({0.0, 0.0}, spec.a));
  } else if (kind == "annulus") {
    spec = fem::OracleSpec::annulus(number("R"), number("r"), N);
    coeffs = spectra::asymptotic_coefficients(ObstacleDomain::make(
        geometry::ConvexDomain::disk({0.0, 0.0}, spec.a), {0.0, 0.0}, spec.b));
  } else {
    throw InvalidInput("unknown oracle kind '" + kind + "'");
  }
  for (const auto& [key, value] : kv) {
    static const std::set<std::string> known{"N", "L", "a", "b", "R", "r", "s", "t"};
    if (!known.count(key)) throw InvalidInput("unknown oracle parameter '" + key + "'");
  }
  const Spectrum s = fem::oracle_spectrum(spec);
  if (quantities.empty()) quantities.push_back("spectrum");
  for (const std::string& q : quantities) {
    if (q == "spectrum") {
      for (std::size_t k = 0; k < s.size() && k < 10; ++k) {
        out << "lambda_" << k + 1 << " = " << format_report(s.eigenvalues[k]) << "\n";
      }
    } else if (q == "trace") {
      const auto it = kv.find("t");
      for (double t : it == kv.end() ? std::vector<double>{1.0} : config::parse_number_list(it->second)) {
        const auto z = spectra::heat_trace(s, t);
        out << "Z(" << format_report(t) << ") = " << format_report(z.value) << " (tail bound "
            << format_report(z.truncation_bound) << ")\n";
      }
    } else if (q == "zeta") {
      const auto it = kv.find("s");
      if (it == kv.end()) throw InvalidInput("oracle zeta needs s=...");
      for (double x : config::parse_number_list(it->second)) {
        const auto z = spectra::zeta(s, coeffs, x);
        out << "zeta(" << format_report(x) << ") = " << format_report(z.value) << " +- "
            << format_report(z.error) << " [" << branch_name(z.branch) << "]\n";
      }
    } else if (q == "det") {
      const auto rep = spectra::zeta_prime_zero_and_det(s, coeffs);
      out << "zeta'(0) = " << format_report(rep.zeta_prime_zero) << " +- "
          << format_report(rep.zeta_prime_zero_error) << "\n"
          << "det = " << format_report(rep.determinant) << " +- "
          << format_report(rep.determinant_error) << "\n";
    } else {
      throw InvalidInput("unknown oracle quantity '" + q + "'");
    }
  }
  return kPass;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dirichlet spectra of planar obstacle domains", "spectral-obstacle"};
  app.require_subcommand(1);
  Flags flags;
  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs{
      {"heart", "heart polygon of the outer domain"},
      {"spectrum", "lowest N eigenvalues at the configured obstacle position"},
      {"trace", "heat trace Z(t) on the t grid"},
      {"zeta", "spectral zeta function on the s grid"},
      {"det", "zeta'(0) and the regularized determinant"},
      {"sweep", "obstacle sweep along a path with monotonicity checks"},
      {"localize", "heat trace over a grid of centers against the heart"},
      {"verify-hadamard", "boundary-integral derivative against finite differences"},
      {"oracle", "analytic spectra: interval, rectangle, disk, annulus"},
  };
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    if (std::string(s.name) == "oracle") {
      sub->add_option("args", flags.positional, "kind, key=value parameters, quantities");
      sub->add_option("--config", flags.config, "experiment config (unused)");
    } else {
      sub->add_option("--config", flags.config, "experiment config file")->required();
    }
    sub->add_flag("--plot", flags.plot, "also write SVG plots");
    sub->add_option("--jobs", flags.jobs, "worker threads (default: logical cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--cache", flags.cache, "spectrum cache directory");
    sub->add_option("--out", flags.out, "output directory");
  }

  std::vector<const char*> argv{"spectral-obstacle"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsageError;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "oracle") return cmd_oracle(flags, out);
    Context ctx(config::load_config(flags.config), flags, out, err);
    int code = kPass;
    if (name == "heart") code = cmd_heart(ctx);
    else if (name == "spectrum") code = cmd_spectrum(ctx);
    else if (name == "trace") code = cmd_trace(ctx);
    else if (name == "zeta") code = cmd_zeta(ctx);
    else if (name == "det") code = cmd_det(ctx);
    else if (name == "sweep") code = cmd_sweep(ctx, err);
    else if (name == "localize") code = cmd_localize(ctx);
    else if (name == "verify-hadamard") code = cmd_hadamard(ctx, err);
    ctx.report_counts();
    return code;
  } catch (const config::ConfigErrors& e) {
    for (const auto& ce : e.errors()) {
      err << flags.config;
      if (ce.line > 0) err << ":" << ce.line;
      err << ": " << ce.message << "\n";
    }
    return kUsageError;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace specobs::cli
