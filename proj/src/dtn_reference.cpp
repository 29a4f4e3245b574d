#include "pmlwave/dtn_reference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "pmlwave/time_integrator.hpp"

namespace pmlwave {

namespace {
constexpr double kPi = std::numbers::pi;
}

cplx ModalTrace::evaluate(double theta) const {
  cplx sum = 0.0;
  for (int n = 1; n <= modes(); ++n) sum += coefficients[n - 1] * std::sin(n * theta);
  return sum;
}

double ModalTrace::weighted_norm(double p) const {
  double sum = 0.0;
  for (int n = 1; n <= modes(); ++n)
    sum += std::pow(1.0 + double(n) * n, p) * std::norm(coefficients[n - 1]);
  return std::sqrt(sum);
}

int ModalTrace::significant_modes(double tolerance) const {
  double peak = 0.0;
  for (const auto& c : coefficients) peak = std::max(peak, std::abs(c));
  int last = 0;
  for (int n = 1; n <= modes(); ++n)
    if (std::abs(coefficients[n - 1]) > tolerance * peak) last = n;
  return last;
}

std::vector<double> trapezoid_weights(const std::vector<double>& theta) {
  const std::size_t m = theta.size();
  std::vector<double> w(m, 0.0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double h = theta[i + 1] - theta[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

ModalTrace project_trace(const std::vector<double>& theta, const std::vector<cplx>& values,
                         int n_modes, double R, ComplexFrequency s) {
  if (theta.size() != values.size())
    throw std::invalid_argument("project_trace: angle and value counts differ");
  if (n_modes < 1) throw std::invalid_argument("project_trace: need at least one mode");
  if (theta.size() < 2 * static_cast<std::size_t>(n_modes)) {
    std::ostringstream err;
    err << "project_trace: " << theta.size() << " samples cannot resolve " << n_modes
        << " modes (need >= " << 2 * n_modes << ")";
    throw std::invalid_argument(err.str());
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] < -1e-12 || theta[i] > kPi + 1e-12 || (i > 0 && !(theta[i] > theta[i - 1])))
      throw std::invalid_argument("project_trace: angles must increase within [0, pi]");
  }
  const auto w = trapezoid_weights(theta);
  ModalTrace t;
  t.R = R;
  t.s = s;
  t.coefficients.assign(n_modes, 0.0);
  for (int n = 1; n <= n_modes; ++n) {
    cplx sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) sum += w[i] * values[i] * std::sin(n * theta[i]);
    t.coefficients[n - 1] = 2.0 / kPi * sum;
  }
  return t;
}

ModalTrace dtn_apply(const ModalTrace& trace) {
  trace.s.validate();
  ModalTrace out = trace;
  const cplx s = trace.s.value();
  for (int n = 1; n <= trace.modes(); ++n)
    out.coefficients[n - 1] *= s * dtn_ratio(n, trace.s, trace.R);
  return out;
}

cplx modal_pairing(const ModalTrace& a, const ModalTrace& b) {
  cplx sum = 0.0;
  for (int n = 0; n < std::min(a.modes(), b.modes()); ++n)
    sum += a.coefficients[n] * std::conj(b.coefficients[n]);
  return 0.5 * kPi * a.R * sum;
}

ComplexVector solve_dtn_truncated(const Mesh& physical, ComplexFrequency s, const ComplexVector& f,
                                  const DtnOptions& options) {
  s.validate();
  const int n = physical.vertex_count();
  if (f.size() != n) throw std::invalid_argument("solve_dtn_truncated: source has the wrong length");
  if (physical.interface_vertices.size() < 2 * static_cast<std::size_t>(options.modes))
    throw std::invalid_argument("solve_dtn_truncated: too few interface vertices for the mode count");
  const cplx sv = s.value();
  const double R = physical.R;

  std::vector<bool> mask(n, false);
  for (const auto& e : physical.boundary) {
    if (e.tag == BoundaryTag::kSurface) mask[e.a] = mask[e.b] = true;
  }
  const RealSparse M = assemble_mass(physical, options.assembly);
  const ComplexSparse S =
      assemble_stiffness(physical, options.assembly).cast<cplx>() + (sv * sv) * M.cast<cplx>();
  const ComplexVector b = sv * (M.cast<cplx>() * f);
  const auto sys = apply_dirichlet<cplx>(S, b, mask);
  std::vector<int> reduced(n, -1);
  for (std::size_t i = 0; i < sys.free_to_full.size(); ++i) reduced[sys.free_to_full[i]] = static_cast<int>(i);

  // D = U diag(c g_n) U^T with U_{v n} = w_v sin(n theta_v), c = 2R/pi.
  const auto& iface = physical.interface_vertices;
  std::vector<double> theta;
  for (int v : iface) theta.push_back(std::clamp(std::atan2(physical.vertices[v].y, physical.vertices[v].x), 0.0, kPi));
  const auto w = trapezoid_weights(theta);
  const int m = options.modes;
  const int nr = static_cast<int>(sys.free_to_full.size());
  Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(nr, m);
  for (std::size_t i = 0; i < iface.size(); ++i) {
    const int r = reduced[iface[i]];
    if (r < 0) continue;
    for (int k = 1; k <= m; ++k) U(r, k - 1) = w[i] * std::sin(k * theta[i]);
  }
  Eigen::VectorXcd g(m);
  for (int k = 1; k <= m; ++k) g[k - 1] = 2.0 * R / kPi * sv * dtn_ratio(k, s, R);

  if (sys.rhs.norm() == 0.0) return ComplexVector::Zero(n);
  LinearSolver<cplx> solver(options.solver);
  solver.factorize(sys.matrix);
  const ComplexVector x0 = solver.solve(sys.rhs);
  Eigen::MatrixXcd Z(nr, m);
  for (int k = 0; k < m; ++k) Z.col(k) = solver.solve(U.col(k));
  // y = g U^T x solves (I - g U^T Z) y = g U^T x0; then x = x0 + Z y.
  Eigen::MatrixXcd C = -(g.asDiagonal() * (U.transpose() * Z));
  C.diagonal().array() += 1.0;
  const Eigen::VectorXcd y = C.partialPivLu().solve(g.asDiagonal() * (U.transpose() * x0));
  const ComplexVector x = x0 + Z * y;

  const ComplexVector res = sys.matrix * x - U * (g.asDiagonal() * (U.transpose() * x)) - sys.rhs;
  const double rel = res.norm() / sys.rhs.norm();
  if (!(rel <= options.solver.max_residual)) {
    std::ostringstream err;
    err << "DtN solve residual " << rel << " exceeds " << options.solver.max_residual;
    throw SolverError(err.str());
  }
  return sys.expand(x);
}

ComplexVector solve_pml_frequency(const Mesh& mesh, const PmlProfile& profile, ComplexFrequency s,
                                  const ComplexVector& f, AssemblyOptions assembly,
                                  SolverOptions solver) {
  const auto sys = assemble_frequency_system(mesh, profile, s, f, assembly);
  const auto c = apply_dirichlet<cplx>(sys.matrix, sys.rhs, sys.dirichlet_mask);
  if (c.rhs.norm() == 0.0) return ComplexVector::Zero(mesh.vertex_count());
  return c.expand(solve<cplx>(c.matrix, c.rhs, solver));
}

cplx pml_extension_mode(int n, ComplexFrequency s, const PmlProfile& profile, double r) {
  s.validate();
  const double R = profile.R();
  if (r < R * (1 - 1e-14)) throw PmlError("pml_extension_mode needs r >= R");
  const double sh = profile.eval(r, true).sigma_hat;
  // s r beta(r) = s r + sigma_hat(r) r
  const cplx z = s.value() * r + sh * r;
  if (z == s.value() * R) return 1.0;
  const ScaledComplex num = bessel_k_scaled(n, z, std::max(n, kDefaultMaxBesselOrder));
  const ScaledComplex den = bessel_k_scaled(n, s.value() * R, std::max(n, kDefaultMaxBesselOrder));
  const cplx q = num.mantissa / den.mantissa;
  const long e = num.exponent - den.exponent;
  if (e < -2000) return 0.0;
  return {std::ldexp(q.real(), static_cast<int>(e)), std::ldexp(q.imag(), static_cast<int>(e))};
}

double relative_l2(const RealSparse& mass, const ComplexVector& value, const ComplexVector& reference) {
  if (value.size() != reference.size() || value.size() != mass.rows())
    throw std::invalid_argument("relative_l2: size mismatch");
  const ComplexVector e = value - reference;
  const double num = e.dot(mass.cast<cplx>() * e).real();
  const double den = reference.dot(mass.cast<cplx>() * reference).real();
  if (den <= 0.0) throw std::invalid_argument("relative_l2: reference has zero norm");
  return std::sqrt(std::max(0.0, num) / den);
}

StudyResult convergence_study(const std::vector<StudyPoint>& points, const StudyOptions& opt) {
  if (points.empty()) throw std::invalid_argument("convergence_study: no sweep points");
  opt.s.validate();
  std::map<double, Mesh> meshes;
  for (const auto& p : points) {
    if (!meshes.count(p.rho))
      meshes.emplace(p.rho, generate_mesh(opt.surface, {opt.R, p.rho, opt.h_target, {}}));
  }
  const Mesh& first = meshes.begin()->second;
  const Submesh sub = physical_submesh(first);
  const int np = sub.mesh.vertex_count();
  for (int i = 0; i < np; ++i)
    if (sub.parent_vertex[i] != i) throw std::logic_error("physical vertices are not numbered first");
  for (const auto& [rho, mesh] : meshes) {
    bool same = mesh.physical_vertex_count == np;
    for (int i = 0; same && i < np; ++i)
      same = mesh.vertices[i].x == first.vertices[i].x && mesh.vertices[i].y == first.vertices[i].y;
    if (!same) {
      std::ostringstream err;
      err << "physical mesh for rho=" << rho << " differs from the shared one";
      throw std::invalid_argument(err.str());
    }
  }

  SourceTerm src;
  src.center = opt.center;
  src.eta = opt.eta;
  src.support_radius = opt.R * (1 + 1e-12);
  const ComplexVector f_phys = src.spatial_nodal(sub.mesh).cast<cplx>();
  const ComplexVector reference = solve_dtn_truncated(sub.mesh, opt.s, f_phys, opt.dtn);
  const RealSparse M_phys = assemble_mass(sub.mesh, opt.dtn.assembly);

  StudyResult result;
  result.rows.resize(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const int count = static_cast<int>(points.size());
#pragma omp parallel for schedule(dynamic) if (opt.parallel_points)
  for (int k = 0; k < count; ++k) {
    try {
      const auto& p = points[k];
      const Mesh& mesh = meshes.at(p.rho);
      const auto prof = PmlProfile::from_string(opt.profile_kind, opt.R, p.rho, p.sigma, opt.mode);
      ComplexVector f = ComplexVector::Zero(mesh.vertex_count());
      f.head(np) = f_phys;
      const ComplexVector u = solve_pml_frequency(mesh, prof, opt.s, f, opt.dtn.assembly, opt.solver);
      StudyRow row;
      row.sigma = p.sigma;
      row.rho = p.rho;
      row.s = opt.s;
      row.error_l2 = relative_l2(M_phys, u.head(np), reference);
      row.predicted_exponent = prof.predicted_exponent();
      result.rows[k] = row;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Pre-floor prefix: each step must shrink the error by floor_ratio.
  int prefix = 1;
  while (prefix < count &&
         result.rows[prefix].error_l2 < opt.floor_ratio * result.rows[prefix - 1].error_l2)
    ++prefix;
  result.fitted_points = prefix;
  for (int k = 1; k < count; ++k)
    if (result.rows[k].error_l2 > result.rows[k - 1].error_l2) result.non_monotone = true;
  std::ostringstream notice;
  if (prefix >= 3) {
    std::vector<double> x, y;
    for (int k = 0; k < prefix; ++k) {
      x.push_back(result.rows[k].predicted_exponent);
      y.push_back(result.rows[k].error_l2);
    }
    result.fit = fit_log_linear(x, y);
    result.fit_valid = true;
    if (prefix < count) notice << "error floor reached after " << prefix << " points; ";
  } else {
    notice << "only " << prefix << " decreasing points before the floor; fit skipped; ";
  }
  if (result.non_monotone)
    notice << "non-monotone errors: discretization error dominates, rerun on a finer mesh";
  result.notice = notice.str();
  return result;
}

void write_study_csv(std::ostream& out, const StudyResult& r) {
  out.precision(12);
  out << "sigma,rho,s1,s2,error_L2,predicted_exponent,fitted_slope,fit_r2\n";
  for (const auto& row : r.rows) {
    out << row.sigma << ',' << row.rho << ',' << row.s.s1 << ',' << row.s.s2 << ',' << row.error_l2
        << ',' << row.predicted_exponent << ',';
    if (r.fit_valid)
      out << r.fit.slope << ',' << r.fit.r2 << '\n';
    else
      out << "nan,nan\n";
  }
}

}  // namespace pmlwave
