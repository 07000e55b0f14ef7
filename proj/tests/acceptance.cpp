// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--criterion N] [--cache DIR]
#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "specobs/cache.hpp"
#include "specobs/cli.hpp"
#include "specobs/eigensolver.hpp"
#include "specobs/errors.hpp"
#include "specobs/geometry.hpp"
#include "specobs/mesher.hpp"
#include "specobs/spectra.hpp"
#include "specobs/variation.hpp"

using namespace specobs;
using namespace specobs::geometry;
using fem::OracleSpec;
namespace fs = std::filesystem;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string pct(double x) {
  std::ostringstream s;
  s << std::setprecision(3) << 100.0 * x << "%";
  return s.str();
}

std::string num(double x) {
  std::ostringstream s;
  s << std::setprecision(4) << x;
  return s.str();
}

/// Mesh provider backed by the on-disk spectrum cache, so the sweep shared by
/// criteria 3 and 4 is solved once.
variation::SpectrumProvider cached_provider(const std::string& dir, double h, int N) {
  const auto solve = variation::mesh_provider(h, 1.0, N);
  return [=](const ObstacleDomain& d, int variant) {
    cache::KeyFields k;
    k.domain_literal = d.outer.literal();
    k.center = d.center;
    k.radius = d.radius;
    k.h = h;
    k.grading = 1.0;
    k.N = N;
    k.tol = fem::SolverOptions{}.tol;
    k.variant = variant;
    const cache::SpectrumCache store(dir);
    const std::string key = cache::cache_key(k);
    if (auto hit = store.load(key)) return *hit;
    Spectrum s = solve(d, variant);
    store.store(key, s);
    return s;
  };
}

// 1. FEM eigenvalues against analytic spectra.
Outcome criterion1() {
  Outcome o;
  const auto square = ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto disk = ConvexDomain::disk({0, 0}, 1);
  const auto annulus = ObstacleDomain::make(disk, {0, 0}, 0.5);
  struct Case {
    const char* name;
    std::function<mesh::Mesh(double)> mesh;
    Spectrum exact;
  };
  const std::vector<Case> cases{
      {"square", [&](double h) { return mesh::mesh_domain(square, h); },
       fem::oracle_spectrum(OracleSpec::rectangle(1, 1, 10))},
      {"disk", [&](double h) { return mesh::mesh_domain(disk, h); }, fem::oracle_spectrum(OracleSpec::disk(1, 10))},
      {"annulus", [&](double h) { return mesh::mesh_domain(annulus, h); },
       fem::oracle_spectrum(OracleSpec::annulus(1, 0.5, 10))},
  };
  for (const auto& c : cases) {
    const Spectrum coarse = fem::assemble_and_solve(c.mesh(0.04), 10);
    const Spectrum fine = fem::assemble_and_solve(c.mesh(0.02), 10);
    const Spectrum extrap = fem::richardson_extrapolate(coarse, fine);
    double worst_fine = 0.0, worst_extrap = 0.0;
    bool above = true;
    for (int k = 0; k < 10; ++k) {
      const double e = c.exact.eigenvalues[k];
      worst_fine = std::max(worst_fine, std::abs(fine.eigenvalues[k] / e - 1));
      worst_extrap = std::max(worst_extrap, std::abs(extrap.eigenvalues[k] / e - 1));
      above = above && fine.eigenvalues[k] >= e - 1e-9;
    }
    o.detail << " " << c.name << " h=0.02 " << pct(worst_fine) << " richardson " << pct(worst_extrap) << ";";
    o.require(worst_fine < 5e-3, std::string(c.name) + " h=0.02 within 0.5%");
    o.require(worst_extrap < 5e-4, std::string(c.name) + " extrapolated within 0.05%");
    o.require(above, std::string(c.name) + " upper bounds");
  }
  return o;
}

// 2. Interval determinant and zeta values.
Outcome criterion2() {
  Outcome o;
  const auto iv = fem::oracle_spectrum(OracleSpec::interval(kPi, 10000));
  const auto c = spectra::interval_coefficients(kPi);
  const auto rep = spectra::zeta_prime_zero_and_det(iv, c);
  const double det_err = std::abs(rep.determinant / (2 * kPi) - 1);
  const auto z2 = spectra::zeta(iv, c, 2.0, spectra::ZetaBranch::Direct);
  const double z2_err = std::abs(z2.value - std::pow(kPi, 4) / 90);
  const auto zq = spectra::zeta(iv, c, 0.25, spectra::ZetaBranch::Mellin);
  const double zq_err = std::abs(zq.value - -1.46035450880958681);
  o.detail << " det=" << std::setprecision(10) << rep.determinant << " (rel " << pct(det_err)
           << "), |zeta(2)-pi^4/90|=" << num(z2_err) << ", |zeta(0.25)-zeta_R(0.5)|=" << num(zq_err)
           << " <= bound " << num(zq.error);
  o.require(det_err < 1e-3, "det within 0.1%");
  o.require(z2_err < 1e-10, "zeta(2) within 1e-10");
  o.require(zq_err <= zq.error, "Mellin zeta(0.25) within its bound");
  return o;
}

variation::SweepResult annulus_sweep(const std::string& cache_dir) {
  std::vector<Point> path;
  for (int i = 0; i <= 6; ++i) path.push_back({0.1 * i, 0.0});
  variation::SweepOptions opts;
  opts.jobs = 0;
  return variation::sweep(ConvexDomain::disk({0, 0}, 1), 0.3, path, {0.05, 0.1, 0.5, 1.0}, 0.02,
                          cached_provider(cache_dir, 0.02, 200), opts);
}

// 3. Z nondecreasing and lambda_1 nonincreasing along the annulus sweep.
Outcome criterion3(const std::string& cache_dir) {
  Outcome o;
  const auto sw = annulus_sweep(cache_dir);
  for (std::size_t j = 0; j < sw.t_grid.size(); ++j) {
    const auto rep = variation::verify_monotone(sw, variation::Quantity::Z, variation::Direction::Nondecreasing,
                                                0.0, j);
    double ratio = 1e300;
    for (std::size_t i = 0; i < rep.steps.size(); ++i) ratio = std::min(ratio, rep.steps[i] / rep.errors[i]);
    o.detail << " Z(t=" << sw.t_grid[j] << ") min step/error " << num(ratio) << ";";
    o.require(rep.pass && rep.certified, "Z(t=" + num(sw.t_grid[j]) + ") certified nondecreasing");
  }
  const auto lam = variation::verify_monotone(sw, variation::Quantity::Lambda1,
                                              variation::Direction::Nonincreasing);
  o.detail << " lambda1 margin " << num(lam.margin) << (lam.certified ? " (certified)" : "") << ";";
  o.require(lam.pass, "lambda1 nonincreasing");
  // Contact limit of Z(t=1) from the outermost positions.
  std::vector<double> margins, values;
  for (std::size_t i = 0; i < sw.points.size(); ++i) {
    margins.push_back(1.0 - sw.positions[i].x - 0.3);
    values.push_back(sw.points[i].Z.back());
  }
  const auto lim = variation::boundary_limit_extrapolation(margins, values);
  o.detail << " Z(t=1) contact limit " << num(lim.limit) << " vs last " << num(values.back());
  o.require(lim.limit > *std::max_element(values.begin(), values.end()), "contact limit exceeds interior values");
  return o;
}

// 4. zeta'(0) relative to the concentric position increases, so det decreases.
Outcome criterion4(const std::string& cache_dir) {
  Outcome o;
  const auto sw = annulus_sweep(cache_dir);
  const auto rep = variation::verify_monotone(sw, variation::Quantity::Det, variation::Direction::Nonincreasing);
  double ratio = 1e300, worst_below = 0.0;
  for (std::size_t i = 0; i < rep.steps.size(); ++i) {
    ratio = std::min(ratio, rep.steps[i] / rep.errors[i]);
    worst_below = std::max(worst_below, std::abs(sw.points[i + 1].dzeta_step->below_cut));
  }
  o.detail << " det steps min step/error " << num(ratio) << ", largest unresolved small-t part "
           << num(worst_below) << " (same sign as the step);";
  o.require(rep.pass && rep.certified, "det strictly decreasing beyond quadrature + truncation error");
  std::vector<double> margins, ratios;
  for (std::size_t i = 0; i < sw.points.size(); ++i) {
    margins.push_back(1.0 - sw.positions[i].x - 0.3);
    ratios.push_back(i == 0 ? 1.0 : sw.points[i].dzeta->det_ratio);
  }
  const auto lim = variation::boundary_limit_extrapolation(margins, ratios);
  o.detail << " det ratio contact limit " << num(lim.limit);
  o.require(lim.limit < *std::min_element(ratios.begin(), ratios.end()), "det contact limit below interior values");
  return o;
}

// 5. Boundary integral against centred finite differences.
Outcome criterion5() {
  Outcome o;
  for (double d : {0.2, 0.4}) {
    const auto dom = ObstacleDomain::make(ConvexDomain::disk({0, 0}, 1), {d, 0}, 0.3);
    for (const auto& c : variation::hadamard_check(dom, {0.2, 1.0}, {1, 0})) {
      o.detail << " d=" << d << " t=" << c.t << " gap " << pct(c.relative_gap) << ";";
      o.require(c.relative_gap <= 0.05, "gap within 5%");
      o.require(c.boundary_integral > 0 && c.finite_difference > 0, "positive derivative");
    }
  }
  return o;
}

// 6. Heart localization of the heat-trace minimizer.
Outcome criterion6() {
  Outcome o;
  struct Case {
    const char* name;
    ConvexDomain D;
    double r, h;
  };
  const std::vector<Case> cases{
      {"square", ConvexDomain::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 0.15, 0.02},
      {"triangle", ConvexDomain::polygon({{0, 0}, {1, 0}, {0.38, 0.82}}), 0.08, 0.015},
  };
  for (const auto& c : cases) {
    variation::LocalizationOptions opts;
    opts.h = c.h;
    opts.jobs = 0;
    opts.heart_directions = 1024;
    const auto rep = variation::heart_localization(c.D, c.r, 0.5, variation::mesh_provider(c.h, 1.0, 10), opts);
    o.detail << " " << c.name << ": " << rep.centers.size() << " centers, argmin " << num(rep.argmin_distance_to_heart)
             << " from heart (spacing " << num(rep.spacing) << "), argmax "
             << (rep.argmax_on_shell ? "on shell" : "inside") << ";";
    o.require(rep.argmin_distance_to_heart <= rep.spacing, std::string(c.name) + " argmin within one spacing");
    o.require(rep.argmax_on_shell, std::string(c.name) + " argmax on the outer shell");
  }
  const auto tri = ConvexDomain::polygon({{0, 0}, {1, 0}, {0.38, 0.82}});
  const auto heart = compute_heart(tri, 1024);
  const auto quad = collapse_polygon(heart.vertices, 1e-2 * tri.diameter(), 0.0);
  o.detail << " triangle heart vertices after collapse: " << quad.size();
  o.require(quad.size() == 4, "triangle heart is a quadrilateral");
  return o;
}

// 7. Invariant suites.
Outcome criterion7(const std::string& scratch) {
  Outcome o;
  const auto disk = ConvexDomain::disk({0, 0}, 1);
  std::vector<Spectrum> spectra_list;
  for (double d : {0.0, 0.3}) {
    spectra_list.push_back(
        fem::assemble_and_solve(mesh::mesh_domain(ObstacleDomain::make(disk, {d, 0}, 0.5 - d), 0.03), 40));
  }
  spectra_list.push_back(fem::assemble_and_solve(
      mesh::mesh_domain(ObstacleDomain::make(ConvexDomain::polygon({{0, 0}, {1, 0}, {0.38, 0.82}}), {0.45, 0.28}, 0.1),
                        0.02),
      40));
  spectra_list.push_back(fem::oracle_spectrum(OracleSpec::annulus(1, 0.5, 300)));

  bool trace_ok = true, floor_ok = true;
  for (const auto& s : spectra_list) {
    double prev = 0.0, prev2 = 0.0;
    for (int i = 1; i <= 80; ++i) {
      const double lz = std::log(spectra::heat_trace(s, 0.025 * i).value);
      if (i > 1 && !(lz < prev)) trace_ok = false;
      if (i > 2 && prev2 + lz - 2 * prev < -1e-12) trace_ok = false;
      prev2 = prev;
      prev = lz;
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s.eigenvalues[k] < 2 * kPi * static_cast<double>(k + 1) / s.measure) floor_ok = false;
    }
  }
  o.require(trace_ok, "Z decreasing and log-convex in t");
  o.require(floor_ok, "Li-Yau floor");

  const auto ann = fem::assemble_and_solve(mesh::mesh_domain(ObstacleDomain::make(disk, {0, 0}, 0.5), 0.03), 20);
  const auto full = fem::oracle_spectrum(OracleSpec::disk(1, 20));
  bool mono = true;
  for (int k = 0; k < 20; ++k) mono = mono && ann.eigenvalues[k] >= full.eigenvalues[k];
  o.require(mono, "lambda_k(annulus) >= lambda_k(disk)");

  bool shrink = true;
  for (const auto& D : {ConvexDomain::polygon({{0, 0}, {1, 0}, {0.38, 0.82}}),
                        ConvexDomain::polygon({{0, 0}, {2, 0}, {2.4, 0.7}, {1, 1.3}, {-0.3, 0.6}})}) {
    for (int M = 16; M <= 512; M *= 2) {
      const auto coarse = compute_heart(D, M);
      for (const Point& v : compute_heart(D, 2 * M).vertices) {
        shrink = shrink && distance_to_polygon(coarse.vertices, v) < 1e-9;
      }
    }
  }
  o.require(shrink, "heart shrinks as directions are added");

  // Cold, cold and warm CLI runs of a small sweep give identical bytes.
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const std::string cfg = scratch + "/sweep.cfg";
  std::ofstream(cfg) << "[domain]\nouter = disk(1)\nradius = 0.3\n[mesh]\nh = 0.05\nN = 20\n"
                        "[spectra]\nt_grid = 0.5, 1\n[sweep]\npath = line((0,0),(0.3,0),3)\n";
  const auto run = [&](const std::string& out, const std::string& cache) {
    std::ostringstream so, se;
    std::vector<std::string> args{"sweep", "--config", cfg, "--out", scratch + "/" + out, "--jobs", "1"};
    if (!cache.empty()) {
      args.push_back("--cache");
      args.push_back(scratch + "/" + cache);
    }
    const int code = cli::run(args, so, se);
    std::ifstream in(scratch + "/" + out + "/sweep.csv", std::ios::binary);
    std::stringstream bytes;
    bytes << in.rdbuf();
    return std::make_tuple(code, bytes.str(), se.str());
  };
  const auto [c1, b1, e1] = run("a", "");
  const auto [c2, b2, e2] = run("b", "cache");
  const auto [c3, b3, e3] = run("c", "cache");
  const bool determinism = c1 == 0 && c2 == 0 && c3 == 0 && !b1.empty() && b1 == b2 && b2 == b3 &&
                           e3.find("eigensolves: 0") != std::string::npos;
  o.require(determinism, "bit-identical reruns with a warm cache and no eigensolves");
  fs::remove_all(scratch);
  o.detail << " spectra checked: " << spectra_list.size() + 1;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  std::string cache_dir = (fs::temp_directory_path() / "specobs_acceptance_cache").string();
  app.add_option("--criterion", only, "run a single criterion (1-7)")->check(CLI::Range(0, 7));
  app.add_option("--cache", cache_dir, "spectrum cache for the sweep criteria");
  CLI11_PARSE(app, argc, argv);

  const std::string scratch = (fs::temp_directory_path() / "specobs_acceptance_scratch").string();
  const std::vector<std::function<Outcome()>> criteria{
      criterion1,
      criterion2,
      [&] { return criterion3(cache_dir); },
      [&] { return criterion4(cache_dir); },
      criterion5,
      criterion6,
      [&] { return criterion7(scratch); },
  };
  bool all = true;
  for (int i = 1; i <= 7; ++i) {
    if (only != 0 && i != only) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::cout << "CRITERION " << i << ": " << (o.pass ? "PASS" : "FAIL") << o.detail.str() << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
