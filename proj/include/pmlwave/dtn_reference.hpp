#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmlwave/fem.hpp"
#include "pmlwave/fit.hpp"
#include "pmlwave/pml.hpp"
#include "pmlwave/special_functions.hpp"

namespace pmlwave {

inline constexpr int kDefaultModeCount = 32;

/// Sine coefficients w_n, n = 1..N, of a trace on the semicircle r = R.
struct ModalTrace {
  std::vector<cplx> coefficients;  // [n - 1]
  double R = 1.0;
  ComplexFrequency s;

  int modes() const { return static_cast<int>(coefficients.size()); }
  /// sum_n w_n sin(n theta)
  cplx evaluate(double theta) const;
  /// sqrt(sum (1 + n^2)^p |w_n|^2)
  double weighted_norm(double p = 0.0) const;
  /// Number of leading modes after dropping trailing |w_n| <= tolerance * max |w_n|.
  int significant_modes(double tolerance = 1e-12) const;
};

/// Trapezoid weights in theta for samples ordered in [0, pi].
std::vector<double> trapezoid_weights(const std::vector<double>& theta);

/// (2/pi) int_0^pi w sin(n theta) by the composite trapezoid rule. Throws
/// std::invalid_argument with fewer than 2 * n_modes samples.
ModalTrace project_trace(const std::vector<double>& theta, const std::vector<cplx>& values,
                         int n_modes, double R = 1.0, ComplexFrequency s = {});

/// w_n -> s K_n'(sR)/K_n(sR) w_n.
ModalTrace dtn_apply(const ModalTrace& trace);

/// <a, b> = int_0^pi a conj(b) R dtheta from sine coefficients.
cplx modal_pairing(const ModalTrace& a, const ModalTrace& b);

struct DtnOptions {
  int modes = kDefaultModeCount;
  AssemblyOptions assembly;
  SolverOptions solver;
};

/// u on Omega_R^+ solving int grad u . grad conj(v) + s^2 u conj(v) - <G u, v>
/// = s int f conj(v), Dirichlet on the surface. The DtN term is a rank-`modes`
/// block on the interface, handled by block elimination. The mesh must be a
/// physical-region mesh (interface_vertices on |x| = R).
ComplexVector solve_dtn_truncated(const Mesh& physical, ComplexFrequency s, const ComplexVector& f,
                                  const DtnOptions& options = {});

/// Solution of the PML Helmholtz problem on the whole mesh.
ComplexVector solve_pml_frequency(const Mesh& mesh, const PmlProfile& profile, ComplexFrequency s,
                                  const ComplexVector& f, AssemblyOptions assembly = {},
                                  SolverOptions solver = {});

/// K_n(s r beta(r)) / K_n(s R) for r >= R.
cplx pml_extension_mode(int n, ComplexFrequency s, const PmlProfile& profile, double r);

/// sqrt(e^H M e / r^H M r).
double relative_l2(const RealSparse& mass, const ComplexVector& value, const ComplexVector& reference);

struct StudyPoint {
  double sigma = 0.0;
  double rho = 0.0;
};

struct StudyRow {
  double sigma = 0.0;
  double rho = 0.0;
  ComplexFrequency s;
  double error_l2 = 0.0;
  double predicted_exponent = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  LinearFit fit;          // log error vs predicted exponent over the pre-floor prefix
  int fitted_points = 0;  // length of that prefix
  bool fit_valid = false;
  bool non_monotone = false;  // error rises again after the prefix
  std::string notice;
};

struct StudyOptions {
  double R = 2.0;
  double h_target = 0.05;
  SurfaceProfile surface = SurfaceProfile::default_rough();
  std::string profile_kind = "constant";
  SigmaHatMode mode = SigmaHatMode::kIntegral;
  ComplexFrequency s{1.0, 2.0};
  // Spatial factor of the source; only values on |x| <= R enter.
  Point center{0.0, 0.5};
  double eta = 0.1;
  // Decrease by less than this factor ends the pre-floor prefix.
  double floor_ratio = 0.9;
  DtnOptions dtn;
  SolverOptions solver;
  bool parallel_points = true;
};

/// Relative L2(Omega_R^+) distance between the PML and DtN solutions for
/// every point; the physical mesh is shared by all points.
StudyResult convergence_study(const std::vector<StudyPoint>& points, const StudyOptions& options);

/// sigma,rho,s1,s2,error_L2,predicted_exponent,fitted_slope,fit_r2
void write_study_csv(std::ostream& out, const StudyResult& result);

}  // namespace pmlwave
