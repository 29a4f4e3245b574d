#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pmlwave/experiments.hpp"

using namespace pmlwave;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig tiny() {
  RunConfig c = preset("example1");
  c.h_target = 0.2;
  c.T = 1.0;
  c.dt = 0.02;
  c.snapshots = 3;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pmlwave_test_" + name);
  fs::remove_all(p);
  return p;
}

Trajectory synthetic(double scale) {
  Trajectory t;
  t.dt = 0.1;
  t.physical_vertex_count = 3;
  t.physical_steps = {0, 1};
  t.physical_u = {RealVector::Zero(3), RealVector(3)};
  t.physical_u[1] << 1.0, -2.0, 0.5;
  for (auto& u : t.physical_u) u *= scale;
  return t;
}

}  // namespace

TEST_CASE("presets") {
  const RunConfig a = preset("example1");
  CHECK(a.R == 2.0);
  CHECK(a.rho == 3.0);
  CHECK(a.sigma == 10.0);
  CHECK(a.sigma_hat_mode == SigmaHatMode::kEqual);
  CHECK(a.eta == 0.1);
  CHECK(a.x0.x == 0.0);
  CHECK(a.x0.y == 0.5);
  CHECK(a.temporal == TemporalKind::kSine);
  CHECK(a.omega == 2.0);
  CHECK(a.T == 8.0);
  const RunConfig b = preset("example2");
  CHECK(b.rho == 3.4);
  CHECK(b.sigma == 25.0);
  CHECK(b.temporal == TemporalKind::kLinear);
  CHECK(b.T == 10.0);
  CHECK(b.x0.y == 0.5);
  CHECK_THROWS_AS(preset("example3"), ConfigError);
  CHECK_NOTHROW(validate(a));
  CHECK_NOTHROW(validate(b));
}

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "name = trial\n"
      "[pml]\n"
      "sigma = 15   # trailing comment\n"
      "sigma_hat_mode = integral\n"
      "[geometry]\n"
      "rho = 3.5\n"
      "surface = sine:0.2:3:0.5\n"
      "source.x0 = 0.1, 0.7\n");
  // A dotted key inside a section is relative to it; use a bare key instead.
  CHECK_THROWS_WITH_AS(parse_config(in, "cfg"), "cfg:9: unknown key 'geometry.source.x0'", ConfigError);

  std::istringstream ok(
      "[pml]\nsigma = 15\nsigma_hat_mode = integral\n[]\n");
  CHECK_THROWS_WITH_AS(parse_config(ok, "a.cfg"), "a.cfg:4: malformed section header '[]'", ConfigError);

  std::istringstream good(
      "name = trial\n[pml]\nsigma = 15\n\n[output]\nprobes = 0, 1; 0.5, 0.5\n[sweep]\nparam = sigma\n"
      "values = 5, 10, 15, 20\n");
  const RunConfig c = parse_config(good, "g.cfg");
  CHECK(c.name == "trial");
  CHECK(c.sigma == 15.0);
  CHECK(c.probes.size() == 2);
  CHECK(c.probes[1].x == 0.5);
  CHECK(c.sweep == SweepParameter::kSigma);
  CHECK(c.sweep_values == std::vector<double>{5, 10, 15, 20});

  std::istringstream bad("time.dt = fast\n");
  CHECK_THROWS_WITH_AS(parse_config(bad, "b.cfg"), "b.cfg:1: key 'time.dt': 'fast' is not a number", ConfigError);
  std::istringstream noeq("\n\ntime.dt 0.1\n");
  CHECK_THROWS_WITH_AS(parse_config(noeq, "c.cfg"), "c.cfg:3: expected 'key = value', got 'time.dt 0.1'",
                       ConfigError);
}

TEST_CASE("format and parse round trip") {
  RunConfig c = preset("example2");
  c.sweep = SweepParameter::kThickness;
  c.sweep_values = {0.4, 0.8, 1.2, 1.6};
  c.reference_sigma = 33.3;
  c.s = {0.7, -1.0 / 3.0};
  c.x0 = {0.1, 0.1 + 0.2};
  const std::string text = format_config(c);
  std::istringstream in(text);
  const RunConfig back = parse_config(in, "round");
  CHECK(format_config(back) == text);
  CHECK(back.s.s2 == c.s.s2);
  CHECK(back.x0.y == c.x0.y);
  CHECK(*back.reference_sigma == 33.3);
  CHECK(!back.reference_rho);
}

TEST_CASE("validation") {
  RunConfig c = preset("example1");
  auto fails = [&](auto change, const std::string& key) {
    RunConfig d = c;
    change(d);
    try {
      validate(d);
      FAIL("no error for " << key);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(key) != std::string::npos);
    }
  };
  fails([](RunConfig& d) { d.rho = 1.5; }, "geometry.rho");
  fails([](RunConfig& d) { d.eta = 0.0; }, "source.eta");
  fails([](RunConfig& d) { d.dt = 0.3; }, "time.dt");
  fails([](RunConfig& d) { d.dt = 0.015; }, "time.dt");
  fails([](RunConfig& d) { d.profile = "gauss"; }, "pml.profile");
  fails([](RunConfig& d) { d.surface = "bumpy"; }, "geometry.surface");
  fails([](RunConfig& d) { d.probes = {{0.0, 2.5}}; }, "output.probes");
  fails([](RunConfig& d) { d.sweep_values = {1, 2, 3, 4}; }, "sweep.values");
  fails([](RunConfig& d) {
    d.sweep = SweepParameter::kSigma;
    d.sweep_values = {5, 10, 15};
  }, "sweep.values");
  fails([](RunConfig& d) {
    d.sweep = SweepParameter::kSigma;
    d.sweep_values = {5, 15, 10, 20};
  }, "sweep.values");
  fails([](RunConfig& d) {
    d.sweep = SweepParameter::kSigma;
    d.sweep_values = {5, 10, 15, 20};
    d.reference_sigma = 20.0;
  }, "reference.sigma");
  fails([](RunConfig& d) {
    d.sweep = SweepParameter::kThickness;
    d.sweep_values = {1, 2, 3, 4};
    d.reference_rho = 5.5;
  }, "reference.rho");
}

TEST_CASE("reference rule") {
  RunConfig c = preset("example1");
  c.sweep = SweepParameter::kSigma;
  c.sweep_values = {5, 10, 15, 20, 25};
  auto r = resolve_reference(c);
  CHECK(r.sigma == doctest::Approx(32.5));
  CHECK(r.rho == doctest::Approx(3.3));
  c.reference_sigma = 40.0;
  c.reference_rho = 4.0;
  r = resolve_reference(c);
  CHECK(r.sigma == 40.0);
  CHECK(r.rho == 4.0);

  c = preset("example1");
  c.sigma = 25.0;
  c.sweep = SweepParameter::kThickness;
  c.sweep_values = {2.6, 3.0, 3.4, 3.7, 4.0};
  r = resolve_reference(c);
  CHECK(r.sigma == doctest::Approx(32.5));
  CHECK(r.rho == doctest::Approx(2.0 + 5.2));
  const auto pts = sweep_points(c);
  CHECK(pts.size() == 5);
  CHECK(pts[0].rho == doctest::Approx(4.6));
  CHECK(pts[4].sigma == 25.0);
}

TEST_CASE("relative error") {
  const Trajectory a = synthetic(1.0);
  CHECK(relative_error(a, a) == 0.0);
  CHECK(relative_error(a, synthetic(2.0)) == 0.5);
  Trajectory b = synthetic(1.0);
  b.physical_steps = {0, 2};
  CHECK_THROWS_AS(relative_error(a, b), std::invalid_argument);
  b = synthetic(1.0);
  b.physical_vertex_count = 4;
  CHECK_THROWS_AS(relative_error(a, b), std::invalid_argument);
  CHECK_THROWS_AS(relative_error(a, synthetic(0.0)), std::invalid_argument);
  CHECK_THROWS_AS(relative_error(Trajectory{}, a), std::invalid_argument);
}

TEST_CASE("fits of sweep errors") {
  std::vector<SweepRow> rows;
  for (double s : {5.0, 10.0, 15.0, 20.0}) rows.push_back({s, s, 3.0, 0.3 * std::exp(-0.1 * s), 0.0, {}});
  auto f = fit_errors(rows, SweepParameter::kSigma);
  CHECK(f.valid);
  CHECK(f.decaying);
  CHECK(f.fit.slope == doctest::Approx(-0.1));
  CHECK(f.fit.r2 == doctest::Approx(1.0));

  for (auto& r : rows) r.e_rel = 0.02;
  f = fit_errors(rows, SweepParameter::kSigma);
  CHECK(f.valid);
  CHECK(f.fit.slope == doctest::Approx(0.0));
  CHECK(!f.decaying);
  CHECK(!f.notice.empty());

  rows[1].e_rel = std::nan("");
  f = fit_errors(rows, SweepParameter::kSigma);
  CHECK(!f.valid);
  CHECK(f.notice.find("fewer than 4") != std::string::npos);

  std::vector<SweepRow> thick;
  for (double e : {1.0, 2.0, 3.0, 4.0}) thick.push_back({e, 25.0, 2.0 + e, std::exp(-e), 2 * e, {}});
  f = fit_errors(thick, SweepParameter::kThickness);
  CHECK(f.axis == "predicted_exponent");
  CHECK(f.fit.slope == doctest::Approx(-0.5));
}

TEST_CASE("single run writes its artifacts") {
  const fs::path out = scratch("single");
  RunConfig c = tiny();
  run_example(c, out, false);
  for (const char* f : {"manifest.txt", "probes.csv", "functionals.csv", "snapshots/snap_0000.vtk",
                        "snapshots/snap_0002.vtk"})
    CHECK(fs::exists(out / f));
  const std::string manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("status = ok") != std::string::npos);
  CHECK(manifest.find("pml.sigma = 10") != std::string::npos);
  CHECK(manifest.find("mesh.vertices = ") != std::string::npos);
  CHECK(manifest.find("steps = 50") != std::string::npos);
  const std::string probes = slurp(out / "probes.csv");
  CHECK(std::count(probes.begin(), probes.end(), '\n') == 52);
  CHECK(probes.rfind("t,probe_0,probe_1,energy", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("failing run keeps a manifest") {
  const fs::path out = scratch("nan");
  RunConfig c = tiny();
  c.amplitude = 1e308;  // overflows in the first solve
  CHECK_THROWS_AS(run_single(c, c.sigma, c.rho, out), TimeIntegrationError);
  const std::string manifest = slurp(out / "manifest.txt");
  CHECK(manifest.find("status = failed") != std::string::npos);
  CHECK(manifest.find("failed_step = 1") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("small sigma sweep end to end") {
  const fs::path out = scratch("sweep");
  RunConfig c = tiny();
  c.vtk = false;
  c.sweep = SweepParameter::kSigma;
  c.sweep_values = {2, 4, 8, 16};
  run_example(c, out, false);
  const std::string errors = slurp(out / "errors.csv");
  CHECK(errors.rfind("param,E_rel,predicted_exponent\n", 0) == 0);
  CHECK(std::count(errors.begin(), errors.end(), '\n') == 5);
  CHECK(fs::exists(out / "fit.txt"));
  CHECK(fs::exists(out / "reference" / "probes.csv"));
  CHECK(fs::exists(out / "point_03" / "manifest.txt"));
  CHECK(slurp(out / "manifest.txt").find("reference.sigma_resolved = 20.8") != std::string::npos);

  // same config, same bytes
  const fs::path again = scratch("sweep_again");
  run_example(c, again, false);
  CHECK(slurp(again / "errors.csv") == errors);
  CHECK(slurp(again / "fit.txt") == slurp(out / "fit.txt"));

  SweepOptions serial;
  serial.parallel = false;
  const auto r = sweep_and_fit(c, serial);
  for (const auto& row : r.rows) {
    CHECK(row.e_rel > 0.0);
    CHECK(row.e_rel < 1.0);
  }
  CHECK(r.rows[0].e_rel > r.rows[1].e_rel);
  fs::remove_all(out);
  fs::remove_all(again);
}

TEST_CASE("frequency-domain sweep") {
  const fs::path out = scratch("freq");
  RunConfig c = tiny();
  c.h_target = 0.08;
  c.sigma_hat_mode = SigmaHatMode::kIntegral;
  c.sweep = SweepParameter::kSigma;
  c.sweep_values = {1, 2, 4, 8};
  run_example(c, out, true);
  const std::string study = slurp(out / "study.csv");
  CHECK(std::count(study.begin(), study.end(), '\n') == 5);
  CHECK(fs::exists(out / "errors.csv"));
  CHECK(slurp(out / "fit.txt").find("axis = predicted_exponent") != std::string::npos);
  fs::remove_all(out);
}
