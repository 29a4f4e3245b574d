#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmlwave/fem.hpp"
#include "pmlwave/pml.hpp"

namespace pmlwave {

class TimeIntegrationError : public std::runtime_error {
 public:
  TimeIntegrationError(const std::string& what, int step, double t)
      : std::runtime_error(what), step_(step), t_(t) {}
  int step() const { return step_; }
  double time() const { return t_; }

 private:
  int step_;
  double t_;
};

/// Nodal values of the four fields; p and p_star hold the x block then the y block.
struct StateVector {
  RealVector u, p, u_star, p_star;
  double t = 0.0;

  static StateVector zero(int vertex_count);
  bool all_finite() const;
};

enum class TemporalKind { kSine, kLinear, kCustom, kNone };

std::string to_string(TemporalKind kind);
TemporalKind parse_temporal_kind(const std::string& text);

/// f(x, t) = amplitude * g(x) * h(t) with the normalised Gaussian
/// g = exp(-|x-x0|^2 / (2 eta)) / (sqrt(2 pi) eta).
struct SourceTerm {
  Point center{0.0, 0.5};
  double eta = 0.1;
  TemporalKind temporal_kind = TemporalKind::kSine;
  double omega = 2.0;
  double amplitude = 1.0;
  // kCustom: piecewise linear through (times, values); zero outside.
  std::vector<double> sample_times, sample_values;
  // h(t) = 0 for t >= switch_off.
  double switch_off = std::numeric_limits<double>::infinity();
  // g = 0 for |x| > support_radius.
  double support_radius = std::numeric_limits<double>::infinity();

  void validate() const;
  double spatial(Point x) const;
  double temporal(double t) const;
  RealVector spatial_nodal(const Mesh& mesh) const;

 private:
  double interpolate_samples(double t) const;
};

struct StepperOptions {
  AssemblyOptions assembly;
  SolverOptions solver;
};

/// Relative residuals of the four block equations of one implicit Euler step.
struct StepResiduals {
  double u = 0, p = 0, u_star = 0, p_star = 0;
  double max() const;
};

/// Implicit Euler for the first-order PML system. The four equations are
/// solved as one sparse system; the matrix is factored once.
class TimeStepper {
 public:
  TimeStepper(const Mesh& mesh, const PmlProfile& profile, double dt, StepperOptions options = {});

  /// f_next: nodal source values at the new time level; only the physical
  /// region contributes.
  StateVector step(const StateVector& state, const RealVector& f_next) const;

  /// Recomputed from the individual blocks, not from the monolithic matrix.
  StepResiduals residuals(const StateVector& prev, const StateVector& next,
                          const RealVector& f_next) const;

  double energy(const StateVector& state) const;  // (|u|_M^2 + |p|_M^2) / 2

  double dt() const { return dt_; }
  const Mesh& mesh() const { return mesh_; }
  const PmlProfile& profile() const { return profile_; }
  const TimeBlocks& blocks() const { return blocks_; }
  const DofMap& dofs() const { return dofs_; }
  const RealSparse& system_matrix() const { return system_; }

 private:
  Mesh mesh_;
  PmlProfile profile_;
  double dt_;
  TimeBlocks blocks_;
  DofMap dofs_;
  std::vector<int> keep_;  // reduced unknown -> full index in [u, p, u*, p*]
  RealSparse system_;
  RealSparse history_;     // reduced rows x full columns
  LinearSolver<double> solver_;
};

struct RunOptions {
  double T = 8.0;
  double dt = 0.01;
  std::vector<Point> probes;
  int snapshot_count = 20;
  std::vector<double> snapshot_times;  // added to the evenly spaced ones
  int physical_stride = 1;             // record u on the physical region every k steps, 0 = never
  bool check_residuals = false;
  StepperOptions stepper;
};

struct Snapshot {
  int step = 0;
  StateVector state;
};

/// Per-step series (index 0 is t = 0) plus stored fields.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Point> probes;
  std::vector<std::vector<double>> probe_values;  // [step][probe]
  std::vector<double> energy;
  std::vector<double> derivative_norm;  // |d_t u| + |d_t p| + |d_t u*| + |d_t p*|
  std::vector<double> sigma_u_norm;     // |sigma u|
  std::vector<double> dtu_sigma_u_norm; // |d_t u + sigma u|
  std::vector<double> source_norm;      // |d_t f + sigma f|
  std::vector<Snapshot> snapshots;
  int physical_vertex_count = 0;
  std::vector<int> physical_steps;
  std::vector<RealVector> physical_u;  // u on vertices [0, physical_vertex_count)
  double max_residual = 0.0;           // worst StepResiduals::max(), if checked
};

struct StabilityFunctionals {
  double growth_lhs = 0, growth_rhs = 0;
  double damping_lhs = 0, damping_rhs = 0;
};

Trajectory run(const Mesh& mesh, const PmlProfile& profile, const SourceTerm& source,
               const RunOptions& options);
/// Same, reusing an existing stepper (its dt must match options.dt).
Trajectory run(const TimeStepper& stepper, const SourceTerm& source, const RunOptions& options);

StabilityFunctionals stability_functionals(const Trajectory& trajectory);

/// Legacy VTK unstructured grid with point data u, u_star (scalars), p, p_star (vectors).
void write_vtk(std::ostream& out, const Mesh& mesh, const StateVector& state);
/// t, probe_k..., energy, derivative_norm, sigma_u, dtu_sigma_u, source_norm
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace pmlwave
