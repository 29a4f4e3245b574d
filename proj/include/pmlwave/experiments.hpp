#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmlwave/dtn_reference.hpp"
#include "pmlwave/time_integrator.hpp"

namespace pmlwave {

/// Bad configuration. `where` is "name:line" for file input, "--set" or
/// "preset" otherwise.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what) {}
};

enum class SweepParameter { kNone, kSigma, kThickness };
std::string to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& text);

struct RunConfig {
  std::string name = "custom";
  // geometry
  double R = 2.0;
  double rho = 3.0;
  double h_target = 0.05;
  std::string surface = "rough";  // flat | rough | sine:<amplitude>:<wavenumber>:<half_width>
  // pml
  double sigma = 10.0;
  SigmaHatMode sigma_hat_mode = SigmaHatMode::kEqual;
  std::string profile = "constant";  // constant | power:<p>
  // source
  Point x0{0.0, 0.5};
  double eta = 0.1;
  TemporalKind temporal = TemporalKind::kSine;
  double omega = 2.0;
  double amplitude = 1.0;
  // time
  double T = 8.0;
  double dt = 0.01;
  // output
  int snapshots = 20;
  bool vtk = true;
  std::vector<Point> probes{{0.0, 0.6}, {0.0, 1.5}};
  // sweep
  SweepParameter sweep = SweepParameter::kNone;
  std::vector<double> sweep_values;
  // reference run for E_rel; unset values follow the 30% margin rule
  std::optional<double> reference_sigma;
  std::optional<double> reference_rho;
  // frequency domain
  ComplexFrequency s{1.0, 2.0};
  int modes = kDefaultModeCount;
  SolverKind solver = SolverKind::kUmfpack;

  SurfaceProfile surface_profile() const;
  PmlProfile pml_profile(double sigma_value, double rho_value) const;
  SourceTerm source() const;
};

RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Sets one dotted key, e.g. "pml.sigma". Throws ConfigError naming the key.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::string& where = "");

/// Reads "key = value" lines on top of `base`. '#' starts a comment, a line
/// "[section]" prefixes following keys with "section.". Errors carry name:line.
RunConfig parse_config(std::istream& in, const std::string& name, RunConfig base = {});

/// All keys in the grammar of parse_config; parsing it gives the config back.
std::string format_config(const RunConfig& config);

/// Throws ConfigError.
void validate(const RunConfig& config);

struct Reference {
  double sigma = 0.0;
  double rho = 0.0;
};

/// sigma_ref = 1.3 max sigma, rho_ref - R = 1.3 max (rho - R), unless set.
/// Throws ConfigError if the reference does not strictly dominate.
Reference resolve_reference(const RunConfig& config);

/// (sigma, rho) of each sweep point, or of the single run.
std::vector<StudyPoint> sweep_points(const RunConfig& config);

/// max |u - u_ref| / max |u_ref| over the stored physical-region fields.
/// Throws std::invalid_argument if the grids differ.
double relative_error(const Trajectory& run, const Trajectory& reference);

struct SweepRow {
  double parameter = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  double e_rel = 0.0;
  double predicted_exponent = 0.0;
  StabilityFunctionals functionals;
};

struct FitReport {
  LinearFit fit;
  bool valid = false;
  bool decaying = false;
  std::string axis;  // "parameter" or "predicted_exponent"
  std::string notice;
};

/// Least squares of log error against the parameter (sigma sweeps) or the
/// predicted exponent (thickness sweeps). Needs 4 finite positive errors.
FitReport fit_errors(const std::vector<SweepRow>& rows, SweepParameter parameter);

struct SweepResult {
  Reference reference;
  std::vector<SweepRow> rows;
  FitReport fit;
  StabilityFunctionals reference_functionals;
};

struct SweepOptions {
  bool parallel = true;
  // Per-point artifacts go to <dir>/point_<k>, the reference to <dir>/reference.
  std::optional<std::filesystem::path> artifact_dir;
};

/// Time-domain sweep: one run per point plus the reference, then E_rel and
/// the fit. Requires config.sweep != kNone.
SweepResult sweep_and_fit(const RunConfig& config, const SweepOptions& options = {});

/// Frequency-domain counterpart built on convergence_study.
StudyResult frequency_sweep(const RunConfig& config);

struct RunSummary {
  Trajectory trajectory;
  StabilityFunctionals functionals;
  MeshQuality quality;
  int vertices = 0;
  int triangles = 0;
};

/// Single time-domain run; artifacts (probes.csv, functionals.csv,
/// snapshots/, manifest.txt) go to `dir` when given.
RunSummary run_single(const RunConfig& config, double sigma, double rho,
                      const std::optional<std::filesystem::path>& dir, int physical_stride = 0);

/// Dispatches to run_single, sweep_and_fit or frequency_sweep and writes the
/// artifact directory. Failures are recorded in the manifest and rethrown.
void run_example(const RunConfig& config, const std::filesystem::path& out, bool frequency_domain);

void write_errors_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_fit(std::ostream& out, const FitReport& fit);
void write_functionals_csv(std::ostream& out, const StabilityFunctionals& f);

}  // namespace pmlwave
