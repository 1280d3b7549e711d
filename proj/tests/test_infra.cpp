#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "swn/config.hpp"
#include "swn/runner.hpp"
#include "swn/snapshot.hpp"
#include "swn/stats.hpp"
#include "test_util.hpp"

using namespace swn;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("swn_test_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("snapshot round trip is byte identical") {
  TempDir dir("snap");
  TorusLattice lat = build_lattice(6, 1.5);
  CounterRng rng(311, 0);
  U1Connection a = random_smooth_u1(lat, rng, 0.7);
  SUnConnection b = random_smooth_sun(lat, 3, rng, 0.2);
  SpinorField f = normalize(random_spinor_field(lat, 3, rng), lat);
  double alpha = 0.613;

  std::string p1 = dir.str() + "/one.swn";
  std::string p2 = dir.str() + "/two.swn";
  write_snapshot(p1, a, b, f, alpha, lat);
  Snapshot snap = load_snapshot(p1);
  REQUIRE(snap.N == 6);
  REQUIRE(snap.L == 1.5);
  REQUIRE(snap.n == 3);
  REQUIRE(snap.alpha == alpha);
  write_snapshot(p2, snap.a, snap.b, snap.psi, snap.alpha, lat);
  REQUIRE(read_file_bytes(p1) == read_file_bytes(p2));

  // trivial background survives the round trip as identity links
  std::string p3 = dir.str() + "/triv.swn";
  write_snapshot(p3, a, SUnConnection::trivial(lat, 2),
                 normalize(random_spinor_field(lat, 2, rng), lat), 0.3, lat);
  REQUIRE(load_snapshot(p3).b.is_trivial);
}

TEST_CASE("snapshot loader reports header, version and size problems distinctly") {
  TempDir dir("snaperr");
  TorusLattice lat = build_lattice(4, 1.0);
  CounterRng rng(313, 0);
  SpinorField f = normalize(random_spinor_field(lat, 2, rng), lat);
  std::string good = dir.str() + "/good.swn";
  write_snapshot(good, U1Connection::trivial(lat), SUnConnection::trivial(lat, 2), f, 0.5, lat);

  std::string bytes = read_file_bytes(good);

  std::string truncated = dir.str() + "/short.swn";
  write_text_file(truncated, bytes.substr(0, bytes.size() - 17));
  try {
    load_snapshot(truncated);
    FAIL("expected size mismatch");
  } catch (const SnapshotError& e) {
    REQUIRE(e.kind == SnapshotError::Kind::size_mismatch);
  }

  std::string magic = dir.str() + "/magic.swn";
  std::string mangled = bytes;
  mangled[0] = 'X';
  write_text_file(magic, mangled);
  try {
    load_snapshot(magic);
    FAIL("expected bad magic");
  } catch (const SnapshotError& e) {
    REQUIRE(e.kind == SnapshotError::Kind::bad_magic);
  }

  std::string version = dir.str() + "/version.swn";
  std::string revved = bytes;
  revved[4] = 9;  // version u32 LSB
  write_text_file(version, revved);
  try {
    load_snapshot(version);
    FAIL("expected bad version");
  } catch (const SnapshotError& e) {
    REQUIRE(e.kind == SnapshotError::Kind::bad_version);
  }

  try {
    load_snapshot(dir.str() + "/missing.swn");
    FAIL("expected io error");
  } catch (const SnapshotError& e) {
    REQUIRE(e.kind == SnapshotError::Kind::io);
  }
}

TEST_CASE("config parsing, validation and overrides") {
  TempDir dir("cfg");
  std::string path = dir.str() + "/run.cfg";
  write_text_file(path,
                  "# comment\n"
                  "mode = continue\n"
                  "N = 8\n"
                  "L = 1.0\n"
                  "n = 2\n"
                  "schedule = 0.785398,0.392699,0.196350\n"
                  "b_background = random\n"
                  "seed = 42\n");
  RunConfig c = load_config_file(path);
  REQUIRE(c.mode == "continue");
  REQUIRE(c.N == 8);
  REQUIRE(c.schedule.size() == 3);
  REQUIRE(validate(c).empty());

  c.schedule = {0.3, 0.5};  // not decreasing
  REQUIRE_FALSE(validate(c).empty());

  RunConfig bad;
  bad.mode = "solve";
  bad.alpha = 2.0;  // out of (0, pi/2]
  bad.N = 3;
  auto errors = validate(bad);
  REQUIRE(errors.size() >= 2);

  REQUIRE_THROWS_AS(load_config_file(dir.str() + "/none.cfg"), ConfigError);
  write_text_file(path, "unknown_key = 3\n");
  REQUIRE_THROWS_AS(load_config_file(path), ConfigError);
  write_text_file(path, "garbage line\n");
  REQUIRE_THROWS_AS(load_config_file(path), ConfigError);
}

TEST_CASE("runner: config validation failure returns exit code 2") {
  RunConfig bad;
  bad.mode = "nonsense";
  REQUIRE(run(bad) == 2);
}

TEST_CASE("runner determinism: identical config and seed reproduce manifest hashes") {
  TempDir d1("runA"), d2("runB");
  RunConfig cfg;
  cfg.mode = "verify-identities";
  cfg.seed = 2024;
  cfg.reference = true;

  cfg.out_dir = d1.str();
  REQUIRE(run(cfg) == 0);
  cfg.out_dir = d2.str();
  REQUIRE(run(cfg) == 0);

  Json m1 = Json::parse(read_file_bytes(d1.str() + "/manifest.json"));
  Json m2 = Json::parse(read_file_bytes(d2.str() + "/manifest.json"));
  REQUIRE(m1["config_hash"] == m2["config_hash"]);
  REQUIRE(m1["files"] == m2["files"]);
  REQUIRE(m1["mode"] == "reference");
}

TEST_CASE("runner solve mode emits a loadable snapshot and pinned record keys") {
  TempDir dir("solve");
  RunConfig cfg;
  cfg.mode = "solve";
  cfg.N = 6;
  cfg.n = 2;
  cfg.alpha = M_PI / 2;
  cfg.seed = 7;
  cfg.max_iters = 600;
  cfg.reference = true;
  cfg.out_dir = dir.str();
  int code = run(cfg);
  REQUIRE((code == 0 || code == 1));

  Snapshot snap = load_snapshot(dir.str() + "/state.swn");
  REQUIRE(snap.N == 6);
  Json rec = Json::parse(read_file_bytes(dir.str() + "/solve.json"));
  for (const char* key :
       {"alpha", "residual", "energy", "sup_psi", "l2_mu", "iterations", "converged"})
    REQUIRE(rec.contains(key));
}

TEST_CASE("stats: line fit, spearman, median") {
  std::vector<double> x = {0, 1, 2, 3, 4};
  std::vector<double> y = {1, 3, 5, 7, 9};
  LineFit f = fit_line(x, y);
  REQUIRE(f.slope == Catch::Approx(2.0));
  REQUIRE(f.intercept == Catch::Approx(1.0));

  REQUIRE(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == Catch::Approx(1.0));
  REQUIRE(spearman({1, 2, 3, 4}, {40, 30, 20, 10}) == Catch::Approx(-1.0));
  REQUIRE(spearman({1, 1, 1, 1}, {1, 2, 3, 4}) == 0.0);
  REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
  REQUIRE(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  REQUIRE_THROWS_AS(fit_line({1.0}, {2.0}), std::invalid_argument);
}
