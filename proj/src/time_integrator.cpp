#include "pmlwave/time_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace pmlwave {

StateVector StateVector::zero(int n) {
  StateVector s;
  s.u = RealVector::Zero(n);
  s.p = RealVector::Zero(2 * n);
  s.u_star = RealVector::Zero(n);
  s.p_star = RealVector::Zero(2 * n);
  return s;
}

bool StateVector::all_finite() const {
  return u.allFinite() && p.allFinite() && u_star.allFinite() && p_star.allFinite();
}

std::string to_string(TemporalKind kind) {
  switch (kind) {
    case TemporalKind::kSine: return "sin";
    case TemporalKind::kLinear: return "linear";
    case TemporalKind::kCustom: return "custom";
    case TemporalKind::kNone: return "none";
  }
  return "?";
}

TemporalKind parse_temporal_kind(const std::string& text) {
  if (text == "sin" || text == "sine") return TemporalKind::kSine;
  if (text == "linear" || text == "t") return TemporalKind::kLinear;
  if (text == "custom") return TemporalKind::kCustom;
  if (text == "none") return TemporalKind::kNone;
  throw std::invalid_argument("temporal kind must be sin, linear, custom or none, got '" + text + "'");
}

double SourceTerm::interpolate_samples(double t) const {
  if (t < sample_times.front() || t > sample_times.back()) return 0.0;
  const auto it = std::upper_bound(sample_times.begin(), sample_times.end(), t);
  const std::size_t i = std::clamp<std::size_t>(it - sample_times.begin(), 1, sample_times.size() - 1);
  const double t0 = sample_times[i - 1], t1 = sample_times[i];
  const double w = (t - t0) / (t1 - t0);
  return (1 - w) * sample_values[i - 1] + w * sample_values[i];
}

void SourceTerm::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("source width eta must be > 0");
  if (!std::isfinite(amplitude)) throw std::invalid_argument("source amplitude must be finite");
  if (temporal_kind == TemporalKind::kCustom) {
    if (sample_times.size() != sample_values.size() || sample_times.size() < 2)
      throw std::invalid_argument("custom temporal factor needs >= 2 (time, value) samples");
    for (std::size_t i = 1; i < sample_times.size(); ++i)
      if (!(sample_times[i] > sample_times[i - 1]))
        throw std::invalid_argument("custom sample times must increase strictly");
    const bool covers_zero = sample_times.front() <= 0.0 && sample_times.back() >= 0.0;
    if (covers_zero && interpolate_samples(0.0) != 0.0) throw std::invalid_argument("custom temporal factor must vanish at t = 0");
  }
}

double SourceTerm::spatial(Point x) const {
  if (norm(x) > support_radius) return 0.0;
  const double dx = x.x - center.x, dy = x.y - center.y;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * eta)) / (std::sqrt(2.0 * std::numbers::pi) * eta);
}

double SourceTerm::temporal(double t) const {
  if (t >= switch_off || t <= 0.0) return 0.0;
  switch (temporal_kind) {
    case TemporalKind::kSine: return amplitude * std::sin(omega * t);
    case TemporalKind::kLinear: return amplitude * t;
    case TemporalKind::kNone: return 0.0;
    case TemporalKind::kCustom: return amplitude * interpolate_samples(t);
  }
  return 0.0;
}

RealVector SourceTerm::spatial_nodal(const Mesh& mesh) const {
  RealVector g(mesh.vertex_count());
  for (int v = 0; v < mesh.vertex_count(); ++v) g[v] = spatial(mesh.vertices[v]);
  return g;
}

double StepResiduals::max() const { return std::max({u, p, u_star, p_star}); }

TimeStepper::TimeStepper(const Mesh& mesh, const PmlProfile& profile, double dt,
                         StepperOptions options)
    : mesh_(mesh),
      profile_(profile),
      dt_(dt),
      blocks_(assemble_time_blocks(mesh, profile, options.assembly)),
      dofs_(mesh),
      solver_(options.solver) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be > 0");
  const int n = mesh.vertex_count();
  const auto& b = blocks_;
  // Full ordering [u (N), p (2N), u* (N), p* (2N)].
  const int pu = 0, pp = n, pus = 3 * n, pps = 4 * n, total = 6 * n;
  RealSparse top_left = b.M + dt * b.M_sum;
  RealSparse p_p = b.M_p + dt * b.M_L1;
  RealSparse p_ps = b.M_p + dt * b.M_L2;
  const RealSparse full = compose_blocks<double>(
      total, total,
      {{pu, pu, &top_left, 1.0},
       {pu, pp, &b.B, -dt},
       {pu, pus, &b.M_sigma_hat, dt},
       {pp, pp, &p_p, 1.0},
       {pp, pps, &p_ps, -1.0},
       {pus, pu, &b.M_sigma, -dt},
       {pus, pus, &b.M, 1.0},
       {pps, pu, &b.G, dt},
       {pps, pps, &b.M_p, 1.0}});
  const RealSparse hist = compose_blocks<double>(
      total, total,
      {{pu, pu, &b.M, 1.0},
       {pp, pp, &b.M_p, 1.0},
       {pp, pps, &b.M_p, -1.0},
       {pus, pus, &b.M, 1.0},
       {pps, pps, &b.M_p, 1.0}});
  for (int v = 0; v < n; ++v)
    if (dofs_.u(v) >= 0) keep_.push_back(v);
  for (int i = n; i < total; ++i) keep_.push_back(i);
  std::vector<int> all(total);
  for (int i = 0; i < total; ++i) all[i] = i;
  system_ = select_rows_cols(full, keep_, keep_);
  history_ = select_rows_cols(hist, keep_, all);
  solver_.factorize(system_);
}

StateVector TimeStepper::step(const StateVector& state, const RealVector& f_next) const {
  const int n = mesh_.vertex_count();
  if (f_next.size() != n) throw std::invalid_argument("source vector has the wrong length");
  RealVector full(6 * n);
  full << state.u, state.p, state.u_star, state.p_star;
  RealVector rhs = history_ * full;
  const RealVector mf = dt_ * (blocks_.M_source * f_next);
  const int free_u = dofs_.free_u_count();
  for (int i = 0; i < free_u; ++i) rhs[i] += mf[keep_[i]];
  const RealVector x = solver_.solve(rhs);
  RealVector next_full = RealVector::Zero(6 * n);
  for (std::size_t i = 0; i < keep_.size(); ++i) next_full[keep_[i]] = x[i];
  StateVector next;
  next.u = next_full.segment(0, n);
  next.p = next_full.segment(n, 2 * n);
  next.u_star = next_full.segment(3 * n, n);
  next.p_star = next_full.segment(4 * n, 2 * n);
  next.t = state.t + dt_;
  return next;
}

StepResiduals TimeStepper::residuals(const StateVector& prev, const StateVector& next,
                                     const RealVector& f_next) const {
  const auto& b = blocks_;
  const double dt = dt_;
  auto rel = [](const RealVector& r, double scale) { return scale > 0 ? r.norm() / scale : r.norm(); };
  const RealVector du = (next.u - prev.u) / dt;
  const RealVector dp = (next.p - prev.p) / dt;
  const RealVector dus = (next.u_star - prev.u_star) / dt;
  const RealVector dps = (next.p_star - prev.p_star) / dt;

  // (d_t u, v) + ((sigma + sigma_hat) u, v) + (sigma_hat u*, v) - (p, grad v) = (f, v)
  const RealVector t1 = b.M * du, t2 = b.M_sum * next.u, t3 = b.M_sigma_hat * next.u_star,
                   t4 = b.B * next.p, t5 = b.M_source * f_next;
  RealVector ru = t1 + t2 + t3 - t4 - t5;
  const auto& mask = dofs_.dirichlet_mask();
  for (int v = 0; v < ru.size(); ++v)
    if (mask[v]) ru[v] = 0.0;
  StepResiduals r;
  r.u = rel(ru, t1.norm() + t2.norm() + t3.norm() + t4.norm() + t5.norm());

  const RealVector q1 = b.M_p * dp, q2 = b.M_L1 * next.p, q3 = b.M_p * dps, q4 = b.M_L2 * next.p_star;
  r.p = rel(q1 + q2 - q3 - q4, q1.norm() + q2.norm() + q3.norm() + q4.norm());

  const RealVector s1 = b.M * dus, s2 = b.M_sigma * next.u;
  r.u_star = rel(s1 - s2, s1.norm() + s2.norm());

  const RealVector g1 = b.M_p * dps, g2 = b.G * next.u;
  r.p_star = rel(g1 + g2, g1.norm() + g2.norm());
  return r;
}

double TimeStepper::energy(const StateVector& s) const {
  return 0.5 * (s.u.dot(blocks_.M * s.u) + s.p.dot(blocks_.M_p * s.p));
}

Trajectory run(const Mesh& mesh, const PmlProfile& profile, const SourceTerm& source,
               const RunOptions& options) {
  if (!(options.dt > 0.0)) throw std::invalid_argument("time step must be > 0");
  const TimeStepper stepper(mesh, profile, options.dt, options.stepper);
  return run(stepper, source, options);
}

namespace {

double mass_norm(const RealSparse& M, const RealVector& x) {
  return std::sqrt(std::max(0.0, x.dot(M * x)));
}

// sqrt(int (a + sigma b)^2) from the assembled pairings.
double combined_norm(const RealSparse& M, const RealSparse& Ms, const RealSparse& Ms2,
                     const RealVector& a, const RealVector& b) {
  return std::sqrt(std::max(0.0, a.dot(M * a) + 2.0 * a.dot(Ms * b) + b.dot(Ms2 * b)));
}

}  // namespace

Trajectory run(const TimeStepper& stepper, const SourceTerm& source, const RunOptions& options) {
  source.validate();
  const Mesh& mesh = stepper.mesh();
  const int n = mesh.vertex_count();
  const double dt = options.dt;
  if (std::abs(dt - stepper.dt()) > 1e-15 * dt)
    throw std::invalid_argument("run options dt differs from the stepper's dt");
  if (!(options.T > 0.0)) throw std::invalid_argument("final time T must be > 0");
  if (dt > options.T / 50.0 * (1 + 1e-12)) {
    std::ostringstream err;
    err << "dt = " << dt << " exceeds T/50 = " << options.T / 50.0;
    throw std::invalid_argument(err.str());
  }
  const long steps_l = std::lround(options.T / dt);
  if (std::abs(steps_l * dt - options.T) > 1e-9 * options.T) {
    std::ostringstream err;
    err << "T = " << options.T << " is not a multiple of dt = " << dt;
    throw std::invalid_argument(err.str());
  }
  const int steps = static_cast<int>(steps_l);

  std::vector<Location> probe_loc;
  const PointLocator locator(mesh);
  for (const Point& p : options.probes) {
    const auto loc = locator.locate(p);
    if (!loc) {
      std::ostringstream err;
      err << "probe (" << p.x << ", " << p.y << ") lies outside the mesh";
      throw std::invalid_argument(err.str());
    }
    probe_loc.push_back(*loc);
  }
  auto probe = [&](const RealVector& u) {
    std::vector<double> out;
    for (const auto& loc : probe_loc) {
      const auto& t = mesh.triangles[loc.triangle];
      out.push_back(loc.barycentric[0] * u[t[0]] + loc.barycentric[1] * u[t[1]] +
                    loc.barycentric[2] * u[t[2]]);
    }
    return out;
  };

  std::set<int> snap_steps;
  for (int k = 1; k <= options.snapshot_count; ++k)
    snap_steps.insert(static_cast<int>(std::lround(static_cast<double>(k) * steps / options.snapshot_count)));
  for (double t : options.snapshot_times) {
    const long s = std::lround(t / dt);
    if (s < 0 || s > steps) throw std::invalid_argument("snapshot time outside [0, T]");
    snap_steps.insert(static_cast<int>(s));
  }

  const TimeBlocks& b = stepper.blocks();
  const RealSparse M_sigma2 = assemble_mass<double>(
      mesh,
      [&](Point p, int k) {
        if (mesh.regions[k] != Region::kPml) return 0.0;
        const double s = stepper.profile().eval(norm(p), true).sigma;
        return s * s;
      },
      options.stepper.assembly);

  Trajectory tr;
  tr.dt = dt;
  tr.probes = options.probes;
  tr.physical_vertex_count = mesh.physical_vertex_count;
  StateVector state = StateVector::zero(n);
  const RealVector g = source.spatial_nodal(mesh);
  RealVector f_prev = RealVector::Zero(n);

  auto record_physical = [&](int step, const StateVector& s) {
    if (options.physical_stride > 0 && step % options.physical_stride == 0) {
      tr.physical_steps.push_back(step);
      tr.physical_u.push_back(s.u.head(mesh.physical_vertex_count));
    }
  };
  tr.times.push_back(0.0);
  tr.probe_values.push_back(probe(state.u));
  tr.energy.push_back(0.0);
  tr.derivative_norm.push_back(0.0);
  tr.sigma_u_norm.push_back(0.0);
  tr.dtu_sigma_u_norm.push_back(0.0);
  tr.source_norm.push_back(0.0);
  record_physical(0, state);
  if (snap_steps.count(0)) tr.snapshots.push_back({0, state});

  for (int k = 1; k <= steps; ++k) {
    const double t = k * dt;
    const RealVector f = g * source.temporal(t);
    StateVector next;
    try {
      next = stepper.step(state, f);
    } catch (const SolverError& e) {
      throw TimeIntegrationError("step " + std::to_string(k) + ": " + e.what(), k, t);
    }
    next.t = t;
    if (options.check_residuals)
      tr.max_residual = std::max(tr.max_residual, stepper.residuals(state, next, f).max());
    if (!next.all_finite()) {
      std::ostringstream err;
      err << "non-finite field values at step " << k << " (t = " << t << ")";
      throw TimeIntegrationError(err.str(), k, t);
    }
    const RealVector du = (next.u - state.u) / dt;
    tr.times.push_back(t);
    tr.probe_values.push_back(probe(next.u));
    tr.energy.push_back(stepper.energy(next));
    tr.derivative_norm.push_back(mass_norm(b.M, du) + mass_norm(b.M_p, (next.p - state.p) / dt) +
                                 mass_norm(b.M, (next.u_star - state.u_star) / dt) +
                                 mass_norm(b.M_p, (next.p_star - state.p_star) / dt));
    tr.sigma_u_norm.push_back(mass_norm(M_sigma2, next.u));
    tr.dtu_sigma_u_norm.push_back(combined_norm(b.M, b.M_sigma, M_sigma2, du, next.u));
    tr.source_norm.push_back(combined_norm(b.M, b.M_sigma, M_sigma2, (f - f_prev) / dt, f));
    record_physical(k, next);
    if (snap_steps.count(k)) tr.snapshots.push_back({k, next});
    f_prev = f;
    state = std::move(next);
  }
  return tr;
}

StabilityFunctionals stability_functionals(const Trajectory& tr) {
  StabilityFunctionals out;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    out.growth_lhs = std::max(out.growth_lhs, tr.derivative_norm[k]);
    out.growth_rhs += (k > 0 ? tr.dt : 0.0) * tr.source_norm[k];
    out.damping_lhs = std::max(out.damping_lhs, tr.sigma_u_norm[k]);
    out.damping_rhs = std::max(out.damping_rhs, tr.dtu_sigma_u_norm[k]);
  }
  return out;
}

void write_vtk(std::ostream& out, const Mesh& mesh, const StateVector& s) {
  const int n = mesh.vertex_count();
  out.precision(12);
  out << "# vtk DataFile Version 3.0\n";
  out << "pml wave field t=" << s.t << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.vertices) out << p.x << ' ' << p.y << " 0\n";
  out << "CELLS " << mesh.triangle_count() << ' ' << 4 * mesh.triangle_count() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.triangle_count() << '\n';
  for (int k = 0; k < mesh.triangle_count(); ++k) out << "5\n";
  out << "POINT_DATA " << n << '\n';
  auto scalars = [&](const char* name, const RealVector& v) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) out << v[i] << '\n';
  };
  auto vectors = [&](const char* name, const RealVector& v) {
    out << "VECTORS " << name << " double\n";
    for (int i = 0; i < n; ++i) out << v[i] << ' ' << v[n + i] << " 0\n";
  };
  scalars("u", s.u);
  scalars("u_star", s.u_star);
  vectors("p", s.p);
  vectors("p_star", s.p_star);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out.precision(12);
  out << "t";
  for (std::size_t j = 0; j < tr.probes.size(); ++j) out << ",probe_" << j;
  out << ",energy,derivative_norm,sigma_u,dtu_sigma_u,source_norm\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    out << tr.times[k];
    for (double v : tr.probe_values[k]) out << ',' << v;
    out << ',' << tr.energy[k] << ',' << tr.derivative_norm[k] << ',' << tr.sigma_u_norm[k] << ','
        << tr.dtu_sigma_u_norm[k] << ',' << tr.source_norm[k] << '\n';
  }
}

}  // namespace pmlwave
