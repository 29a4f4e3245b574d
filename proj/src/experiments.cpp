#include "pmlwave/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#ifndef PMLWAVE_VERSION
#define PMLWAVE_VERSION "unknown"
#endif

namespace fs = std::filesystem;

namespace pmlwave {

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::kNone: return "none";
    case SweepParameter::kSigma: return "sigma";
    case SweepParameter::kThickness: return "thickness";
  }
  return "none";
}

SweepParameter parse_sweep_parameter(const std::string& text) {
  if (text == "none" || text.empty()) return SweepParameter::kNone;
  if (text == "sigma") return SweepParameter::kSigma;
  if (text == "thickness" || text == "rho-R") return SweepParameter::kThickness;
  throw std::invalid_argument("sweep parameter must be none, sigma or thickness, got '" + text + "'");
}

SurfaceProfile RunConfig::surface_profile() const {
  if (surface == "flat") return SurfaceProfile::flat();
  if (surface == "rough") return SurfaceProfile::default_rough();
  if (surface.rfind("sine:", 0) == 0) {
    std::vector<double> v;
    std::stringstream in(surface.substr(5));
    std::string item;
    while (std::getline(in, item, ':')) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size()) throw std::invalid_argument("bad number in surface '" + surface + "'");
      v.push_back(x);
    }
    if (v.size() != 3) throw std::invalid_argument("surface 'sine:' needs amplitude:wavenumber:half_width");
    return SurfaceProfile::sine_bump(v[0], v[1], v[2]);
  }
  throw std::invalid_argument("unknown surface '" + surface + "' (flat, rough, sine:a:k:w)");
}

PmlProfile RunConfig::pml_profile(double sigma_value, double rho_value) const {
  return PmlProfile::from_string(profile, R, rho_value, sigma_value, sigma_hat_mode);
}

SourceTerm RunConfig::source() const {
  SourceTerm src;
  src.center = x0;
  src.eta = eta;
  src.temporal_kind = temporal;
  src.omega = omega;
  src.amplitude = amplitude;
  return src;
}

RunConfig preset(const std::string& name) {
  RunConfig c;
  if (name == "example1") {
    c.name = name;
    return c;
  }
  if (name == "example2") {
    c.name = name;
    c.rho = 3.4;
    c.sigma = 25.0;
    c.temporal = TemporalKind::kLinear;
    c.T = 10.0;
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + name + "' (example1, example2)");
}

std::vector<std::string> preset_names() { return {"example1", "example2"}; }

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) throw std::invalid_argument("'" + t + "' is not a number");
  return v;
}

int to_int(const std::string& text) {
  const double v = to_double(text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument("'" + text + "' is not an integer");
  return static_cast<int>(v);
}

bool to_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw std::invalid_argument("'" + text + "' is not a boolean");
}

std::vector<double> to_list(const std::string& text) {
  std::vector<double> out;
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::string item;
  while (in >> item) out.push_back(to_double(item));
  return out;
}

Point to_point(const std::string& text) {
  const auto v = to_list(text);
  if (v.size() != 2) throw std::invalid_argument("'" + text + "' is not a point 'x, y'");
  return {v[0], v[1]};
}

std::vector<Point> to_points(const std::string& text) {
  std::vector<Point> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ';'))
    if (!trim(item).empty()) out.push_back(to_point(item));
  return out;
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"name", [](RunConfig& c, const std::string& v) { c.name = trim(v); },
       [](const RunConfig& c) { return c.name; }},
      {"geometry.R", [](RunConfig& c, const std::string& v) { c.R = to_double(v); },
       [](const RunConfig& c) { return num(c.R); }},
      {"geometry.rho", [](RunConfig& c, const std::string& v) { c.rho = to_double(v); },
       [](const RunConfig& c) { return num(c.rho); }},
      {"geometry.h_target", [](RunConfig& c, const std::string& v) { c.h_target = to_double(v); },
       [](const RunConfig& c) { return num(c.h_target); }},
      {"geometry.surface", [](RunConfig& c, const std::string& v) { c.surface = trim(v); },
       [](const RunConfig& c) { return c.surface; }},
      {"pml.sigma", [](RunConfig& c, const std::string& v) { c.sigma = to_double(v); },
       [](const RunConfig& c) { return num(c.sigma); }},
      {"pml.sigma_hat_mode",
       [](RunConfig& c, const std::string& v) { c.sigma_hat_mode = parse_sigma_hat_mode(trim(v)); },
       [](const RunConfig& c) { return to_string(c.sigma_hat_mode); }},
      {"pml.profile", [](RunConfig& c, const std::string& v) { c.profile = trim(v); },
       [](const RunConfig& c) { return c.profile; }},
      {"source.x0", [](RunConfig& c, const std::string& v) { c.x0 = to_point(v); },
       [](const RunConfig& c) { return num(c.x0.x) + ", " + num(c.x0.y); }},
      {"source.eta", [](RunConfig& c, const std::string& v) { c.eta = to_double(v); },
       [](const RunConfig& c) { return num(c.eta); }},
      {"source.temporal", [](RunConfig& c, const std::string& v) { c.temporal = parse_temporal_kind(trim(v)); },
       [](const RunConfig& c) { return to_string(c.temporal); }},
      {"source.omega", [](RunConfig& c, const std::string& v) { c.omega = to_double(v); },
       [](const RunConfig& c) { return num(c.omega); }},
      {"source.amplitude", [](RunConfig& c, const std::string& v) { c.amplitude = to_double(v); },
       [](const RunConfig& c) { return num(c.amplitude); }},
      {"time.T", [](RunConfig& c, const std::string& v) { c.T = to_double(v); },
       [](const RunConfig& c) { return num(c.T); }},
      {"time.dt", [](RunConfig& c, const std::string& v) { c.dt = to_double(v); },
       [](const RunConfig& c) { return num(c.dt); }},
      {"output.snapshots", [](RunConfig& c, const std::string& v) { c.snapshots = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.snapshots); }},
      {"output.vtk", [](RunConfig& c, const std::string& v) { c.vtk = to_bool(v); },
       [](const RunConfig& c) { return std::string(c.vtk ? "true" : "false"); }},
      {"output.probes", [](RunConfig& c, const std::string& v) { c.probes = to_points(v); },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.probes.size(); ++i)
           out += (i ? "; " : "") + num(c.probes[i].x) + ", " + num(c.probes[i].y);
         return out;
       }},
      {"sweep.param", [](RunConfig& c, const std::string& v) { c.sweep = parse_sweep_parameter(trim(v)); },
       [](const RunConfig& c) { return to_string(c.sweep); }},
      {"sweep.values", [](RunConfig& c, const std::string& v) { c.sweep_values = to_list(v); },
       [](const RunConfig& c) { return list(c.sweep_values); }},
      {"reference.sigma",
       [](RunConfig& c, const std::string& v) {
         if (trim(v) == "auto") c.reference_sigma.reset(); else c.reference_sigma = to_double(v);
       },
       [](const RunConfig& c) { return c.reference_sigma ? num(*c.reference_sigma) : std::string("auto"); }},
      {"reference.rho",
       [](RunConfig& c, const std::string& v) {
         if (trim(v) == "auto") c.reference_rho.reset(); else c.reference_rho = to_double(v);
       },
       [](const RunConfig& c) { return c.reference_rho ? num(*c.reference_rho) : std::string("auto"); }},
      {"frequency.s1", [](RunConfig& c, const std::string& v) { c.s.s1 = to_double(v); },
       [](const RunConfig& c) { return num(c.s.s1); }},
      {"frequency.s2", [](RunConfig& c, const std::string& v) { c.s.s2 = to_double(v); },
       [](const RunConfig& c) { return num(c.s.s2); }},
      {"frequency.modes", [](RunConfig& c, const std::string& v) { c.modes = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.modes); }},
      {"solver.kind", [](RunConfig& c, const std::string& v) { c.solver = parse_solver_kind(trim(v)); },
       [](const RunConfig& c) { return to_string(c.solver); }},
  };
  return table;
}

}  // namespace

void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::string& where) {
  const std::string k = trim(key);
  for (const auto& entry : keys()) {
    if (k != entry.name) continue;
    try {
      entry.set(config, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(where, "key '" + k + "': " + e.what());
    }
    return;
  }
  throw ConfigError(where, "unknown key '" + k + "'");
}

RunConfig parse_config(std::istream& in, const std::string& name, RunConfig base) {
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = name + ":" + std::to_string(number);
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) throw ConfigError(where, "malformed section header '" + body + "'");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value', got '" + body + "'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(where, "missing key before '='");
    apply_setting(base, section.empty() ? key : section + "." + key, body.substr(eq + 1), where);
  }
  return base;
}

std::string format_config(const RunConfig& config) {
  std::ostringstream out;
  for (const auto& entry : keys()) out << entry.name << " = " << entry.get(config) << '\n';
  return out.str();
}

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("", "key '" + key + "': " + what);
}

}  // namespace

void validate(const RunConfig& c) {
  auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(finite_positive(c.R), "geometry.R", "must be > 0");
  require(std::isfinite(c.rho) && c.rho > c.R, "geometry.rho", "must exceed geometry.R");
  require(finite_positive(c.h_target), "geometry.h_target", "must be > 0");
  require(c.h_target <= (c.rho - c.R) / 2.0, "geometry.h_target", "must be <= (rho - R) / 2");
  try {
    (void)c.surface_profile();
  } catch (const std::exception& e) {
    throw ConfigError("", std::string("key 'geometry.surface': ") + e.what());
  }
  require(std::isfinite(c.sigma) && c.sigma >= 0.0, "pml.sigma", "must be >= 0");
  try {
    (void)c.pml_profile(c.sigma, c.rho);
  } catch (const std::exception& e) {
    throw ConfigError("", std::string("key 'pml.profile': ") + e.what());
  }
  require(finite_positive(c.eta), "source.eta", "must be > 0");
  require(finite_positive(c.omega), "source.omega", "must be > 0");
  require(std::isfinite(c.amplitude), "source.amplitude", "must be finite");
  require(norm(c.x0) < c.R, "source.x0", "must lie inside |x| < R");
  require(finite_positive(c.T), "time.T", "must be > 0");
  require(finite_positive(c.dt), "time.dt", "must be > 0");
  require(c.dt <= c.T / 50.0 * (1 + 1e-12), "time.dt", "must be <= T / 50");
  const double steps = c.T / c.dt;
  require(std::abs(steps - std::round(steps)) < 1e-9 * steps, "time.dt", "T must be a multiple of dt");
  require(c.snapshots >= 0, "output.snapshots", "must be >= 0");
  for (const auto& p : c.probes) require(norm(p) < c.R, "output.probes", "probes must lie inside |x| < R");
  require(finite_positive(c.s.s1), "frequency.s1", "must be > 0");
  require(c.modes >= 1, "frequency.modes", "must be >= 1");

  if (c.sweep == SweepParameter::kNone) {
    require(c.sweep_values.empty(), "sweep.values", "given without sweep.param");
    return;
  }
  require(c.sweep_values.size() >= 4, "sweep.values", "a sweep needs at least 4 values");
  for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
    require(std::isfinite(c.sweep_values[i]) && c.sweep_values[i] > 0.0, "sweep.values", "values must be > 0");
    if (i > 0) require(c.sweep_values[i] > c.sweep_values[i - 1], "sweep.values", "values must be sorted ascending");
  }
  if (c.sweep == SweepParameter::kThickness)
    require(c.h_target <= c.sweep_values.front() / 2.0, "sweep.values", "thickness must be >= 2 h_target");
  (void)resolve_reference(c);
}

std::vector<StudyPoint> sweep_points(const RunConfig& c) {
  std::vector<StudyPoint> out;
  switch (c.sweep) {
    case SweepParameter::kNone: out.push_back({c.sigma, c.rho}); break;
    case SweepParameter::kSigma:
      for (double s : c.sweep_values) out.push_back({s, c.rho});
      break;
    case SweepParameter::kThickness:
      for (double t : c.sweep_values) out.push_back({c.sigma, c.R + t});
      break;
  }
  return out;
}

Reference resolve_reference(const RunConfig& c) {
  const auto points = sweep_points(c);
  double max_sigma = 0.0, max_rho = 0.0;
  for (const auto& p : points) {
    max_sigma = std::max(max_sigma, p.sigma);
    max_rho = std::max(max_rho, p.rho);
  }
  Reference r;
  r.sigma = c.reference_sigma.value_or(1.3 * max_sigma);
  r.rho = c.reference_rho.value_or(c.R + 1.3 * (max_rho - c.R));
  require(r.sigma > max_sigma, "reference.sigma", "must exceed every swept sigma (" + num(max_sigma) + ")");
  require(r.rho > max_rho, "reference.rho", "must exceed every swept rho (" + num(max_rho) + ")");
  return r;
}

double relative_error(const Trajectory& run, const Trajectory& ref) {
  if (run.physical_u.empty() || ref.physical_u.empty())
    throw std::invalid_argument("relative_error: runs carry no stored physical-region fields");
  if (run.physical_vertex_count != ref.physical_vertex_count || run.physical_steps != ref.physical_steps ||
      run.dt != ref.dt)
    throw std::invalid_argument("relative_error: runs use different grids on the physical region");
  double num_max = 0.0, den_max = 0.0;
  for (std::size_t k = 0; k < run.physical_u.size(); ++k) {
    if (run.physical_u[k].size() != ref.physical_u[k].size())
      throw std::invalid_argument("relative_error: stored fields differ in length");
    num_max = std::max(num_max, (run.physical_u[k] - ref.physical_u[k]).cwiseAbs().maxCoeff());
    den_max = std::max(den_max, ref.physical_u[k].cwiseAbs().maxCoeff());
  }
  if (den_max == 0.0) throw std::invalid_argument("relative_error: reference is identically zero");
  return num_max / den_max;
}

FitReport fit_errors(const std::vector<SweepRow>& rows, SweepParameter parameter) {
  FitReport r;
  r.axis = parameter == SweepParameter::kThickness ? "predicted_exponent" : "parameter";
  std::vector<double> x, y;
  for (const auto& row : rows) {
    if (!std::isfinite(row.e_rel) || row.e_rel <= 0.0) continue;
    x.push_back(parameter == SweepParameter::kThickness ? row.predicted_exponent : row.parameter);
    y.push_back(row.e_rel);
  }
  if (x.size() < 4) {
    r.notice = "fewer than 4 finite errors; fit skipped";
    return r;
  }
  r.fit = fit_log_linear(x, y);
  r.valid = true;
  r.decaying = r.fit.slope < -1e-12;
  if (!r.decaying) r.notice = "errors do not decay with the parameter";
  return r;
}

void write_errors_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << std::setprecision(12) << "param,E_rel,predicted_exponent\n";
  for (const auto& r : rows) out << r.parameter << ',' << r.e_rel << ',' << r.predicted_exponent << '\n';
}

void write_fit(std::ostream& out, const FitReport& f) {
  out << std::setprecision(12);
  out << "axis = " << f.axis << '\n';
  if (f.valid) {
    out << "slope = " << f.fit.slope << '\n'
        << "intercept = " << f.fit.intercept << '\n'
        << "r2 = " << f.fit.r2 << '\n'
        << "points = " << f.fit.points << '\n'
        << "decaying = " << (f.decaying ? "true" : "false") << '\n';
  }
  if (!f.notice.empty()) out << "notice = " << f.notice << '\n';
}

void write_functionals_csv(std::ostream& out, const StabilityFunctionals& f) {
  out << std::setprecision(12) << "growth_lhs,growth_rhs,damping_lhs,damping_rhs\n"
      << f.growth_lhs << ',' << f.growth_rhs << ',' << f.damping_lhs << ',' << f.damping_rhs << '\n';
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

// Config first, then results; rewritten as the run progresses.
void write_manifest(const fs::path& dir, const RunConfig& c, const std::string& status,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  auto out = open_out(dir / "manifest.txt");
  out << "# pmlwave run manifest\n" << format_config(c) << "\n[result]\n";
  out << "version = " << PMLWAVE_VERSION << '\n' << "status = " << status << '\n';
  for (const auto& [k, v] : extra) out << k << " = " << v << '\n';
}

Mesh build_mesh(const RunConfig& c, double rho) {
  return generate_mesh(c.surface_profile(), {c.R, rho, c.h_target, {}});
}

std::vector<std::pair<std::string, std::string>> mesh_entries(const Mesh& m) {
  const auto q = mesh_quality(m);
  return {{"mesh.vertices", std::to_string(m.vertex_count())},
          {"mesh.triangles", std::to_string(m.triangle_count())},
          {"mesh.physical_vertices", std::to_string(m.physical_vertex_count)},
          {"mesh.min_angle_deg", num(q.min_angle_deg)},
          {"mesh.max_edge", num(q.max_edge)}};
}

RunSummary run_on_mesh(const RunConfig& c, const Mesh& mesh, double sigma,
                       const std::optional<fs::path>& dir, int physical_stride) {
  RunConfig resolved = c;
  resolved.sigma = sigma;
  resolved.rho = mesh.rho;
  auto extra = mesh_entries(mesh);
  if (dir) {
    fs::create_directories(*dir);
    write_manifest(*dir, resolved, "running", extra);
  }
  RunSummary s;
  s.vertices = mesh.vertex_count();
  s.triangles = mesh.triangle_count();
  s.quality = mesh_quality(mesh);
  RunOptions o;
  o.T = c.T;
  o.dt = c.dt;
  o.probes = c.probes;
  o.snapshot_count = dir && c.vtk ? c.snapshots : 0;
  o.physical_stride = physical_stride;
  o.stepper.solver.kind = c.solver;
  try {
    s.trajectory = run(mesh, c.pml_profile(sigma, mesh.rho), c.source(), o);
  } catch (const TimeIntegrationError& e) {
    if (dir) {
      extra.push_back({"failed_step", std::to_string(e.step())});
      extra.push_back({"failed_time", num(e.time())});
      write_manifest(*dir, resolved, std::string("failed: ") + e.what(), extra);
    }
    throw;
  } catch (const std::exception& e) {
    if (dir) write_manifest(*dir, resolved, std::string("failed: ") + e.what(), extra);
    throw;
  }
  s.functionals = stability_functionals(s.trajectory);
  if (dir) {
    auto probes = open_out(*dir / "probes.csv");
    write_trajectory_csv(probes, s.trajectory);
    auto f = open_out(*dir / "functionals.csv");
    write_functionals_csv(f, s.functionals);
    if (!s.trajectory.snapshots.empty()) {
      fs::create_directories(*dir / "snapshots");
      for (std::size_t k = 0; k < s.trajectory.snapshots.size(); ++k) {
        std::ostringstream name;
        name << "snap_" << std::setw(4) << std::setfill('0') << k << ".vtk";
        auto out = open_out(*dir / "snapshots" / name.str());
        write_vtk(out, mesh, s.trajectory.snapshots[k].state);
      }
    }
    extra.push_back({"steps", std::to_string(s.trajectory.times.size() - 1)});
    extra.push_back({"functionals.growth_lhs", num(s.functionals.growth_lhs)});
    extra.push_back({"functionals.growth_rhs", num(s.functionals.growth_rhs)});
    extra.push_back({"functionals.damping_lhs", num(s.functionals.damping_lhs)});
    extra.push_back({"functionals.damping_rhs", num(s.functionals.damping_rhs)});
    write_manifest(*dir, resolved, "ok", extra);
  }
  return s;
}

bool same_physical_part(const Mesh& a, const Mesh& b) {
  if (a.physical_vertex_count != b.physical_vertex_count) return false;
  for (int i = 0; i < a.physical_vertex_count; ++i)
    if (a.vertices[i].x != b.vertices[i].x || a.vertices[i].y != b.vertices[i].y) return false;
  return true;
}

}  // namespace

RunSummary run_single(const RunConfig& config, double sigma, double rho,
                      const std::optional<fs::path>& dir, int physical_stride) {
  return run_on_mesh(config, build_mesh(config, rho), sigma, dir, physical_stride);
}

SweepResult sweep_and_fit(const RunConfig& c, const SweepOptions& options) {
  validate(c);
  if (c.sweep == SweepParameter::kNone) throw ConfigError("", "sweep_and_fit needs sweep.param");
  SweepResult result;
  result.reference = resolve_reference(c);
  const auto points = sweep_points(c);

  std::map<double, Mesh> meshes;
  meshes.emplace(result.reference.rho, build_mesh(c, result.reference.rho));
  for (const auto& p : points)
    if (!meshes.count(p.rho)) meshes.emplace(p.rho, build_mesh(c, p.rho));
  const Mesh& ref_mesh = meshes.at(result.reference.rho);
  for (const auto& [rho, m] : meshes)
    if (!same_physical_part(m, ref_mesh))
      throw std::invalid_argument("physical region of the rho=" + num(rho) + " mesh differs from the reference");

  auto dir_of = [&](const std::string& leaf) -> std::optional<fs::path> {
    if (!options.artifact_dir) return std::nullopt;
    return *options.artifact_dir / leaf;
  };
  const RunSummary ref = run_on_mesh(c, ref_mesh, result.reference.sigma, dir_of("reference"), 1);
  result.reference_functionals = ref.functionals;

  const int n = static_cast<int>(points.size());
  result.rows.resize(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (int k = 0; k < n; ++k) {
    try {
      const auto& p = points[k];
      std::ostringstream leaf;
      leaf << "point_" << std::setw(2) << std::setfill('0') << k;
      const RunSummary s = run_on_mesh(c, meshes.at(p.rho), p.sigma, dir_of(leaf.str()), 1);
      SweepRow row;
      row.parameter = c.sweep == SweepParameter::kSigma ? p.sigma : p.rho - c.R;
      row.sigma = p.sigma;
      row.rho = p.rho;
      row.e_rel = relative_error(s.trajectory, ref.trajectory);
      row.predicted_exponent = c.pml_profile(p.sigma, p.rho).predicted_exponent();
      row.functionals = s.functionals;
      result.rows[k] = row;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  result.fit = fit_errors(result.rows, c.sweep);
  return result;
}

StudyResult frequency_sweep(const RunConfig& c) {
  validate(c);
  StudyOptions o;
  o.R = c.R;
  o.h_target = c.h_target;
  o.surface = c.surface_profile();
  o.profile_kind = c.profile;
  o.mode = c.sigma_hat_mode;
  o.s = c.s;
  o.center = c.x0;
  o.eta = c.eta;
  o.dtn.modes = c.modes;
  o.dtn.solver.kind = c.solver;
  o.solver.kind = c.solver;
  return convergence_study(sweep_points(c), o);
}

void run_example(const RunConfig& c, const fs::path& out, bool frequency_domain) {
  validate(c);
  fs::create_directories(out);
  std::vector<std::pair<std::string, std::string>> extra;
  write_manifest(out, c, "running", extra);
  try {
    if (frequency_domain) {
      extra.push_back({"mode", "frequency"});
      const StudyResult r = frequency_sweep(c);
      auto study = open_out(out / "study.csv");
      write_study_csv(study, r);
      std::vector<SweepRow> rows;
      for (const auto& s : r.rows)
        rows.push_back({c.sweep == SweepParameter::kThickness ? s.rho - c.R : s.sigma, s.sigma, s.rho,
                        s.error_l2, s.predicted_exponent, {}});
      auto errors = open_out(out / "errors.csv");
      write_errors_csv(errors, rows);
      FitReport f;
      f.axis = "predicted_exponent";
      f.fit = r.fit;
      f.valid = r.fit_valid;
      f.decaying = r.fit_valid && r.fit.slope < 0.0;
      f.notice = r.notice;
      auto fit = open_out(out / "fit.txt");
      write_fit(fit, f);
      extra.push_back({"fit.prefix_points", std::to_string(r.fitted_points)});
    } else if (c.sweep == SweepParameter::kNone) {
      extra.push_back({"mode", "time"});
      const RunSummary s = run_single(c, c.sigma, c.rho, out, 0);
      // run_single wrote its own manifest; keep it.
      (void)s;
      return;
    } else {
      extra.push_back({"mode", "time-sweep"});
      SweepOptions so;
      so.artifact_dir = out;
      const SweepResult r = sweep_and_fit(c, so);
      auto errors = open_out(out / "errors.csv");
      write_errors_csv(errors, r.rows);
      auto fit = open_out(out / "fit.txt");
      write_fit(fit, r.fit);
      auto f = open_out(out / "functionals.csv");
      f << std::setprecision(12) << "param,growth_lhs,growth_rhs,damping_lhs,damping_rhs\n";
      for (const auto& row : r.rows)
        f << row.parameter << ',' << row.functionals.growth_lhs << ',' << row.functionals.growth_rhs << ','
          << row.functionals.damping_lhs << ',' << row.functionals.damping_rhs << '\n';
      extra.push_back({"reference.sigma_resolved", num(r.reference.sigma)});
      extra.push_back({"reference.rho_resolved", num(r.reference.rho)});
      if (r.fit.valid) {
        extra.push_back({"fit.slope", num(r.fit.fit.slope)});
        extra.push_back({"fit.r2", num(r.fit.fit.r2)});
      }
    }
  } catch (const std::exception& e) {
    write_manifest(out, c, std::string("failed: ") + e.what(), extra);
    throw;
  }
  write_manifest(out, c, "ok", extra);
}

}  // namespace pmlwave
