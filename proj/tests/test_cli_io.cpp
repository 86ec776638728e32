#include <doctest.h>

#include <array>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "test_support.hpp"
#include "tdcgl/commands.hpp"
#include "tdcgl/errors.hpp"
#include "tdcgl/run_config.hpp"
#include "tdcgl/snapshot_io.hpp"

using namespace tdcgl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

/// Small, quick configuration used by the command tests.
RunConfig small_config() {
  RunConfig c;
  c.grid_n = 65;
  c.relax.max_outer_iters = 8;
  c.dissipation.levels = 32;
  return c;
}

std::array<std::string, 3> intensity_paths(const std::string& dir) {
  return {join(dir, "intensity_z0.tdcgl"), join(dir, "intensity_z2.tdcgl"), join(dir, "intensity_z4.tdcgl")};
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(TDCGL_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("snapshots round-trip bit for bit") {
  const GridSpec g = GridSpec::square(17);
  ScalarField2D f = test::random_smooth(g, 9);
  f(3, 4) = std::numeric_limits<double>::denorm_min();
  f(0, 0) = -0.0;
  const std::string dir = test::scratch_dir("snapshot");
  const std::string path = join(dir, "f.tdcgl");
  write_snapshot(path, f, 2.5e-5, SnapshotKind::phase);
  const std::string bytes = slurp(path);
  CHECK(bytes.size() == kSnapshotHeaderBytes + 17 * 17 * 8);
  CHECK(bytes.compare(0, 8, std::string("TDCGL1\0\0", 8)) == 0);

  const Snapshot s = read_snapshot(path);
  CHECK(s.kind == SnapshotKind::phase);
  CHECK(s.z == 2.5e-5);
  CHECK(s.h == g.h);
  const ScalarField2D back = s.field();
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double a = back[k], b = f[k];
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
  }

  const std::vector<std::uint8_t> enc = encode_snapshot(s);
  CHECK(std::string(enc.begin(), enc.end()) == bytes);
}

TEST_CASE("complex snapshots round-trip") {
  const GridSpec g = GridSpec::square(9);
  const ComplexField2D c(test::random_smooth(g, 1), test::random_smooth(g, 2));
  const std::string path = join(test::scratch_dir("complex"), "c.tdcgl");
  write_snapshot(path, c, 1.0);
  const Snapshot s = read_snapshot(path);
  CHECK(s.kind == SnapshotKind::complex);
  const ComplexField2D back = s.complex_field();
  CHECK(test::max_diff(back.re, c.re) == 0.0);
  CHECK(test::max_diff(back.im, c.im) == 0.0);
  CHECK_THROWS_AS(s.field(), FormatError);
}

TEST_CASE("corrupt snapshots are rejected") {
  const GridSpec g = GridSpec::square(9);
  const std::string dir = test::scratch_dir("corrupt");
  const std::string path = join(dir, "f.tdcgl");
  write_snapshot(path, ScalarField2D(g, 1.0), 0.0, SnapshotKind::intensity);
  const std::string good = slurp(path);

  spit(path, good.substr(0, good.size() - 1));
  CHECK_THROWS_AS(read_snapshot(path), FormatError);
  spit(path, good + "x");
  CHECK_THROWS_AS(read_snapshot(path), FormatError);
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  spit(path, bad_magic);
  CHECK_THROWS_AS(read_snapshot(path), FormatError);
  std::string bad_kind = good;
  bad_kind[kSnapshotHeaderBytes - 1] = 7;
  spit(path, bad_kind);
  CHECK_THROWS_AS(read_snapshot(path), FormatError);
  spit(path, "");
  CHECK_THROWS_AS(read_snapshot(path), FormatError);
  CHECK_THROWS_AS(read_snapshot(join(dir, "missing.tdcgl")), FormatError);
}

TEST_CASE("tables round-trip through CSV") {
  const std::string path = join(test::scratch_dir("table"), "t.csv");
  const std::vector<double> xs{0.1, 0.2, 0.7}, ys{1.0 / 3.0, -2e-300, 5.0};
  write_table_csv(path, "I", "f", xs, ys);
  CHECK(slurp(path).rfind("I,f\n", 0) == 0);
  const NonlinearFn t = read_table_csv(path);
  CHECK(t.xs() == xs);
  CHECK(t.ys() == ys);
  spit(path, "I,f\n0.1,oops\n");
  CHECK_THROWS_AS(read_table_csv(path), FormatError);
}

TEST_CASE("configs survive serialization") {
  RunConfig c;
  c.grid_n = 129;
  c.model.alpha = 1.0 / 3.0;
  c.model.f = NonlinearFn::tabulated({0.0, 0.5, 1.0}, {0.1, -0.2, 0.3});
  c.ic.A_phi = 1.5;
  c.relax.epsilon = 2e-8;
  c.thresholds.eta_rel = 0.01;
  c.dissipation.levels = 64;
  CHECK(parse_run_config(serialize(c)) == c);
  CHECK(parse_run_config(serialize(RunConfig{})) == RunConfig{});
  CHECK(parse_run_config("") == RunConfig{});

  const std::string path = join(test::scratch_dir("config"), "c.txt");
  save_run_config(path, c);
  CHECK(load_run_config(path) == c);
}

TEST_CASE("config errors name the problem") {
  auto message = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("grid_n = 65\nbogus = 1\n").find("line 2: unknown key 'bogus'") != std::string::npos);
  CHECK(message("alpha = 1\nalpha = 2\n").find("alpha") != std::string::npos);
  CHECK(!message("grid_n = many\n").empty());
  CHECK(!message("grid_n = 2\n").empty());
  CHECK(!message("f = cosine 3\n").empty());
  CHECK(message("# comment only\n\n").empty());
}

TEST_CASE("simulate writes three intensity and three phase planes") {
  const std::string dir = test::scratch_dir("simulate");
  std::ostringstream log;
  RunConfig c = small_config();
  c.grid_n = 33;
  simulate_to(c, dir, log);
  for (const char* what : {"intensity", "phase"})
    for (int j : {0, 2, 4}) {
      const Snapshot s = read_snapshot(join(dir, std::string(what) + "_z" + std::to_string(j) + ".tdcgl"));
      CHECK(s.nx == 33);
      CHECK(s.z == doctest::Approx(j * 0.5e-5));
    }
  CHECK(load_run_config(join(dir, "config.txt")) == c);
  const auto manifest = read_estimates(join(dir, "manifest.txt"));
  CHECK(manifest.front() == std::pair<std::string, std::string>{"grid_n", "33"});
}

TEST_CASE("a single snapshot interval writes one plane") {
  const std::string dir = test::scratch_dir("one_plane");
  std::ostringstream log;
  RunConfig c = small_config();
  c.grid_n = 17;
  c.plan.n_steps = 100;
  simulate_to(c, dir, log);
  CHECK(fs::exists(join(dir, "intensity_z0.tdcgl")));
  CHECK_FALSE(fs::exists(join(dir, "intensity_z2.tdcgl")));
  CHECK_THROWS_AS(infer_files(intensity_paths(dir), "zero", c.relax, join(dir, "out"), log), FormatError);
}

TEST_CASE("mismatched grids name both files") {
  const std::string dir = test::scratch_dir("mismatch");
  const std::string a = join(dir, "a.tdcgl"), b = join(dir, "b.tdcgl");
  write_snapshot(a, ScalarField2D(GridSpec::square(17), 1.0), 0.0, SnapshotKind::intensity);
  write_snapshot(b, ScalarField2D(GridSpec::square(9), 1.0), 1e-5, SnapshotKind::intensity);
  std::ostringstream log;
  try {
    infer_files({a, b, b}, "zero", RelaxationConfig{}, join(dir, "out"), log);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a.tdcgl") != std::string::npos);
    CHECK(msg.find("b.tdcgl") != std::string::npos);
  }
  std::ostringstream guarded;
  CHECK(run_guarded([&] { return infer_files({a, b, b}, "zero", RelaxationConfig{}, join(dir, "out"), guarded); },
                    guarded) == exit_format);
}

TEST_CASE("phase snapshots are refused as intensity input") {
  const std::string dir = test::scratch_dir("kind");
  const std::string p = join(dir, "p.tdcgl");
  write_snapshot(p, ScalarField2D(GridSpec::square(9), 1.0), 0.0, SnapshotKind::phase);
  std::ostringstream log;
  CHECK_THROWS_AS(infer_files({p, p, p}, "zero", RelaxationConfig{}, join(dir, "out"), log), FormatError);
}

TEST_CASE("inference reads only intensities and the g table and is deterministic") {
  const std::string dir = test::scratch_dir("infer");
  std::ostringstream log;
  const RunConfig c = small_config();
  simulate_to(c, join(dir, "data"), log);
  const std::string g = join(dir, "g.csv");
  measure_g_to(c, read_snapshot(join(dir, "data/intensity_z0.tdcgl")).field().max(), g, log);

  ReadAudit::clear();
  const auto paths = intensity_paths(join(dir, "data"));
  REQUIRE(infer_files(paths, g, c.relax, join(dir, "run1"), log) == exit_ok);
  const std::vector<std::string> read = ReadAudit::paths();
  CHECK(read == std::vector<std::string>{paths[0], paths[1], paths[2], g});
  for (const auto& r : read) CHECK(fs::path(r).filename().string().rfind("phase", 0) != 0);

  REQUIRE(infer_files(paths, g, c.relax, join(dir, "run2"), log) == exit_ok);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(join(dir, "run1"))) {
    const std::string name = entry.path().filename().string();
    CHECK_MESSAGE(slurp(entry.path().string()) == slurp(join(join(dir, "run2"), name)), name);
    ++compared;
  }
  CHECK(compared == 8);

  std::map<std::string, std::string> est;
  for (const auto& [k, v] : read_estimates(join(dir, "run1/estimates.txt"))) est[k] = v;
  CHECK(est["status"] == "iteration_cap");
  CHECK(est["iterations_up"] == "8");
  CHECK(std::stod(est["alpha_hat"]) > 0.0);
}

TEST_CASE("zero nonlinearity and dissipation with a flat initial phase") {
  const std::string dir = test::scratch_dir("zero_case");
  RunConfig c = small_config();
  c.model.f = NonlinearFn::zero();
  c.model.g = NonlinearFn::zero();
  c.ic.A_phi = 0.0;
  std::ostringstream log;
  const RoundtripReport r = roundtrip(c, dir, log);
  CHECK((r.exit_code == exit_ok || r.exit_code == exit_threshold));
  CHECK_FALSE(r.f_checked);
  const NonlinearFn g = read_table_csv(join(dir, "g_table.csv"));
  for (double y : g.ys()) CHECK(y == 0.0);
  CHECK(fs::exists(join(dir, "report.txt")));
  CHECK(fs::exists(join(dir, "inference/phase_z1.tdcgl")));
  CHECK(std::isfinite(r.eta_hat));
  CHECK(r.alpha_hat > 0.0);
}

TEST_CASE("exceptions map to exit codes") {
  std::ostringstream log;
  CHECK(run_guarded([] { return 0; }, log) == exit_ok);
  CHECK(run_guarded([]() -> int { throw NonConvergence("x"); }, log) == exit_nonconvergence);
  CHECK(run_guarded([]() -> int { throw NumericalBlowup("x", 12); }, log) == exit_blowup);
  CHECK(run_guarded([]() -> int { throw FormatError("x"); }, log) == exit_format);
  CHECK(run_guarded([]() -> int { throw std::invalid_argument("x"); }, log) == exit_format);
  CHECK(log.str().find("step 12") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  const std::string dir = test::scratch_dir("cli");
  CHECK(run_cli("default-config") == exit_ok);
  CHECK(run_cli("infer -i " + join(dir, "a") + " " + join(dir, "b") + " " + join(dir, "c") + " -o " + join(dir, "o")) ==
        exit_format);
  spit(join(dir, "bad.txt"), "nonsense = 1\n");
  CHECK(run_cli("simulate -c " + join(dir, "bad.txt") + " -o " + join(dir, "o")) == exit_format);

  RunConfig blow = small_config();
  blow.grid_n = 33;
  blow.plan.dz = 1e-2;
  save_run_config(join(dir, "blow.txt"), blow);
  CHECK(run_cli("simulate -c " + join(dir, "blow.txt") + " -o " + join(dir, "o")) == exit_blowup);

  RunConfig tiny = small_config();
  tiny.grid_n = 33;
  save_run_config(join(dir, "tiny.txt"), tiny);
  REQUIRE(run_cli("simulate -c " + join(dir, "tiny.txt") + " -o " + join(dir, "data")) == exit_ok);
  spit(join(dir, "stuck.txt"), "relax.retrieval_max_iters = 1\nrelax.grad_norm_tol = 1e-15\n");
  const auto p = intensity_paths(join(dir, "data"));
  CHECK(run_cli("infer -i " + p[0] + " " + p[1] + " " + p[2] + " -c " + join(dir, "stuck.txt") + " -o " +
                join(dir, "stuck")) == exit_nonconvergence);
  CHECK(fs::exists(join(dir, "stuck/trace_run1.csv")));
}

}
