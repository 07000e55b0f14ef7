#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "specobs/cache.hpp"
#include "specobs/cli.hpp"
#include "specobs/config.hpp"
#include "specobs/eigensolver.hpp"

using namespace specobs;
namespace fs = std::filesystem;

namespace {

const char* kAnnulus = R"(# small offset annulus
[domain]
outer = disk(1)
radius = 0.3
center = (0.2, 0)

[mesh]
h = 0.06
N = 6

[spectra]
t_grid = 0.5, 1
)";

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / ("specobs_cli_" + std::to_string(std::rand()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(root / name) << text;
    return (root / name).string();
  }
  std::string path(const std::string& name) const { return (root / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Result {
  int code;
  std::string out, err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

cache::KeyFields sample_fields() {
  cache::KeyFields f;
  f.domain_literal = "disk(1)";
  f.center = {0.2, 0.0};
  f.radius = 0.3;
  f.h = 0.02;
  f.N = 100;
  f.tol = 1e-9;
  return f;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const auto c = config::parse_config("[domain]\nouter = disk(1)\nradius = 0.5\n");
  CHECK(c.outer->literal() == "disk(1)");
  CHECK(c.radius == 0.5);
  REQUIRE(c.center.has_value());
  CHECK(c.center->x == 0.0);
  CHECK(c.h == 0.02);
  CHECK(c.N == 100);
  CHECK(c.t_grid == std::vector<double>{0.05, 0.1, 0.5, 1.0});
  CHECK(c.hash.size() == 64);
}

TEST_CASE("config errors are collected with line numbers") {
  SUBCASE("obstacle too large") {
    try {
      config::parse_config("[domain]\nouter = disk(1)\nradius = 1.2\n");
      FAIL("expected errors");
    } catch (const config::ConfigErrors& e) {
      REQUIRE(!e.errors().empty());
      CHECK(e.errors()[0].message.find("dist(center, boundary of D) > r") != std::string::npos);
    }
  }
  SUBCASE("duplicate key names both lines") {
    try {
      config::parse_config("[domain]\nouter = disk(1)\nradius = 0.3\nradius = 0.4\n");
      FAIL("expected errors");
    } catch (const config::ConfigErrors& e) {
      REQUIRE(e.errors().size() == 1);
      CHECK(e.errors()[0].line == 4);
      CHECK(e.errors()[0].message.find("3") != std::string::npos);
    }
  }
  SUBCASE("several independent errors at once") {
    try {
      config::parse_config("[domain]\nouter = disc(1)\nbogus = 1\n[mesh]\nh = -1\nN\n[nowhere]\n");
      FAIL("expected errors");
    } catch (const config::ConfigErrors& e) {
      std::vector<int> lines;
      for (const auto& x : e.errors()) lines.push_back(x.line);
      CHECK(std::find(lines.begin(), lines.end(), 2) != lines.end());
      CHECK(std::find(lines.begin(), lines.end(), 3) != lines.end());
      CHECK(std::find(lines.begin(), lines.end(), 5) != lines.end());
      CHECK(std::find(lines.begin(), lines.end(), 6) != lines.end());
      CHECK(std::find(lines.begin(), lines.end(), 7) != lines.end());
      CHECK(std::is_sorted(lines.begin(), lines.end()));
    }
  }
}

TEST_CASE("geometry and list literals") {
  CHECK(config::parse_domain("disk(2)").as_disk().radius == 2.0);
  CHECK(config::parse_domain(" disk( 1.5 , (1,2) ) ").as_disk().center.y == 2.0);
  CHECK(config::parse_domain("polygon((0,0),(1,0),(0,1))").vertices().size() == 3);
  CHECK_THROWS_AS(config::parse_domain("polygon((0,0),(1,0))"), InvalidInput);
  CHECK_THROWS_AS(config::parse_domain("square(1)"), InvalidInput);
  CHECK(config::parse_point("(0.5,-1e-3)").y == -1e-3);
  CHECK(config::parse_number_list("1, 2.5,3e-1") == std::vector<double>{1, 2.5, 0.3});
  const auto line = config::parse_path("line((0,0),(0.6,0),7)");
  REQUIRE(line.size() == 7);
  CHECK(line[3].x == doctest::Approx(0.3));
  CHECK(config::parse_path("(0,0),(0.1,0.2)").size() == 2);
  CHECK_THROWS_AS(config::parse_path("line((0,0),(1,0),1)"), InvalidInput);
}

TEST_CASE("cache keys change with every field") {
  const auto base = sample_fields();
  const std::string k0 = cache::cache_key(base);
  CHECK(k0.size() == 64);
  CHECK(cache::cache_key(base) == k0);
  auto center = base;
  center.center.x += 1e-14;  // below the rounding quantum
  CHECK(cache::cache_key(center) == k0);
  std::vector<cache::KeyFields> variants(10, base);
  variants[0].domain_literal = "disk(2)";
  variants[1].center.x = 0.21;
  variants[2].radius = 0.31;
  variants[3].h = 0.025;
  variants[4].grading = 0.5;
  variants[5].N = 101;
  variants[6].tol = 1e-10;
  variants[7].variant = 1;
  variants[8].consistent_flux = false;
  variants[9].boundary_data = false;
  for (const auto& v : variants) CHECK(cache::cache_key(v) != k0);
}

TEST_CASE("cache round trip and corruption") {
  Workspace ws;
  const cache::SpectrumCache store(ws.path("cache"));
  CHECK(store.enabled());
  CHECK_FALSE(cache::SpectrumCache("").enabled());
  const auto s = fem::oracle_spectrum(fem::OracleSpec::annulus(1.0, 0.3, 20));
  const std::string key = cache::cache_key(sample_fields());
  CHECK_FALSE(store.load(key).has_value());
  store.store(key, s);
  bool corrupt = true;
  const auto back = store.load(key, &corrupt);
  REQUIRE(back.has_value());
  CHECK_FALSE(corrupt);
  CHECK(back->eigenvalues == s.eigenvalues);
  CHECK(back->errors == s.errors);
  {
    std::ofstream f(store.document_path(key), std::ios::app);
    f << " ";
  }
  CHECK_FALSE(store.load(key, &corrupt).has_value());
  CHECK(corrupt);
}

TEST_CASE("warm cache reruns are byte identical and solve nothing") {
  Workspace ws;
  const std::string cfg = ws.write("a.cfg", kAnnulus);
  const std::string cache_dir = ws.path("cache");
  const auto cold = invoke({"trace", "--config", cfg, "--cache", cache_dir, "--out", ws.path("cold"), "--jobs", "1"});
  REQUIRE(cold.code == cli::kPass);
  CHECK(cold.err.find("eigensolves: 1, cache hits: 0") != std::string::npos);
  const auto warm = invoke({"trace", "--config", cfg, "--cache", cache_dir, "--out", ws.path("warm"), "--jobs", "1"});
  REQUIRE(warm.code == cli::kPass);
  CHECK(warm.err.find("eigensolves: 0, cache hits: 1") != std::string::npos);
  CHECK(slurp(ws.path("cold/trace.csv")) == slurp(ws.path("warm/trace.csv")));
  CHECK(warm.out == cold.out);

  // Cold run without any cache: same bytes.
  const auto bare = invoke({"trace", "--config", cfg, "--out", ws.path("bare"), "--jobs", "1"});
  REQUIRE(bare.code == cli::kPass);
  CHECK(slurp(ws.path("bare/trace.csv")) == slurp(ws.path("cold/trace.csv")));

  // Corrupt every cached document: warning, recompute, same output.
  for (const auto& e : fs::directory_iterator(cache_dir)) {
    if (e.path().extension() == ".json") std::ofstream(e.path(), std::ios::app) << "x";
  }
  const auto healed = invoke({"trace", "--config", cfg, "--cache", cache_dir, "--out", ws.path("healed"), "--jobs", "1"});
  REQUIRE(healed.code == cli::kPass);
  CHECK(healed.err.find("warning") != std::string::npos);
  CHECK(healed.err.find("eigensolves: 1") != std::string::npos);
  CHECK(slurp(ws.path("healed/trace.csv")) == slurp(ws.path("cold/trace.csv")));
}

TEST_CASE("environment variable selects the cache, the flag overrides it") {
  Workspace ws;
  const std::string cfg = ws.write("a.cfg", kAnnulus);
  ::setenv(cli::kCacheEnv, ws.path("env_cache").c_str(), 1);
  REQUIRE(invoke({"spectrum", "--config", cfg, "--out", ws.path("o1"), "--jobs", "1"}).code == cli::kPass);
  CHECK(fs::exists(ws.path("env_cache")));
  REQUIRE(invoke({"spectrum", "--config", cfg, "--out", ws.path("o2"), "--jobs", "1", "--cache", ws.path("flag_cache")})
              .code == cli::kPass);
  CHECK(fs::exists(ws.path("flag_cache")));
  ::unsetenv(cli::kCacheEnv);
}

TEST_CASE("CSV headers carry the version tag and the config hash") {
  Workspace ws;
  const std::string cfg = ws.write("a.cfg", kAnnulus);
  REQUIRE(invoke({"spectrum", "--config", cfg, "--out", ws.path("o"), "--jobs", "1"}).code == cli::kPass);
  const std::string hash = config::parse_config(kAnnulus).hash;
  std::ifstream in(ws.path("o/spectrum.csv"));
  std::string first;
  std::getline(in, first);
  CHECK(first.find("version=") != std::string::npos);
  CHECK(first.find("config=" + hash) != std::string::npos);
  REQUIRE(invoke({"heart", "--config", cfg, "--out", ws.path("o"), "--plot"}).code == cli::kPass);
  CHECK(fs::exists(ws.path("o/heart.csv")));
}

TEST_CASE("oracle subcommand prints the interval determinant") {
  const auto r = invoke({"oracle", "interval", "L=3.14159265358979", "N=1000", "det"});
  REQUIRE(r.code == cli::kPass);
  const auto pos = r.out.find("det = ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(r.out.substr(pos + 6)) == doctest::Approx(6.28319).epsilon(1e-5));
  CHECK(invoke({"oracle", "disk", "R=1", "N=3", "spectrum"}).out.find("14.68197") != std::string::npos);
}

TEST_CASE("exit codes") {
  Workspace ws;
  CHECK(invoke({}).code == cli::kUsageError);
  CHECK(invoke({"nonsense"}).code == cli::kUsageError);
  CHECK(invoke({"trace"}).code == cli::kUsageError);  // --config missing
  CHECK(invoke({"trace", "--config", ws.path("missing.cfg")}).code == cli::kUsageError);
  const std::string bad = ws.write("bad.cfg", "[domain]\nouter = disk(1)\nradius = 2\n");
  const auto r = invoke({"trace", "--config", bad});
  CHECK(r.code == cli::kUsageError);
  CHECK(r.err.find("bad.cfg:3:") != std::string::npos);
  // Too few eigenvalues for zeta'(0): numerical failure.
  const std::string thin = ws.write("thin.cfg", kAnnulus);
  CHECK(invoke({"det", "--config", thin, "--out", ws.path("o"), "--jobs", "1"}).code == cli::kNumericalFailure);
}
