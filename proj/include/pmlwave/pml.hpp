#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmlwave/fem.hpp"
#include "pmlwave/special_functions.hpp"

namespace pmlwave {

enum class ProfileKind { kConstant, kPower, kCustom };

/// How sigma_hat is obtained: equal to sigma pointwise, or the radial average
/// (1/r) int_0^r sigma.
enum class SigmaHatMode { kEqual, kIntegral };

std::string to_string(SigmaHatMode mode);
SigmaHatMode parse_sigma_hat_mode(const std::string& text);

class PmlError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SigmaValues {
  double sigma = 0.0;
  double sigma_hat = 0.0;
};

/// Absorption profile on the layer R < r <= rho; sigma vanishes for r <= R.
class PmlProfile {
 public:
  PmlProfile() = default;

  static PmlProfile constant(double R, double rho, double sigma0, SigmaHatMode mode);
  /// sigma(r) = sigma0 ((r - R)/(rho - R))^p
  static PmlProfile power(double R, double rho, double sigma0, double p, SigmaHatMode mode);
  /// sigma_hat is integrated numerically in integral mode.
  static PmlProfile custom(double R, double rho, std::function<double(double)> sigma,
                           SigmaHatMode mode, std::string label = "custom");
  /// "constant" or "power:<p>".
  static PmlProfile from_string(const std::string& kind, double R, double rho, double sigma0,
                              SigmaHatMode mode);

  /// Values at radius r. `in_layer` selects the layer branch for points on
  /// the interface (quadrature points of PML elements may sit on chords with
  /// r slightly below R); such points are clamped to r = R+.
  SigmaValues eval(double r, bool in_layer) const;
  SigmaValues eval(double r) const { return eval(r, r > R_); }

  double R() const { return R_; }
  double rho() const { return rho_; }
  double sigma0() const { return sigma0_; }
  ProfileKind kind() const { return kind_; }
  SigmaHatMode mode() const { return mode_; }
  double exponent() const { return p_; }
  std::string description() const;

  /// rho * sigma_hat(rho) * (1 - R^2/rho^2), the exponent of the theoretical
  /// convergence factor.
  double predicted_exponent() const;

 private:
  double sigma_layer(double r) const;
  double integral(double r) const;  // int_R^r sigma

  double R_ = 1.0;
  double rho_ = 2.0;
  double sigma0_ = 0.0;
  double p_ = 0.0;
  ProfileKind kind_ = ProfileKind::kConstant;
  SigmaHatMode mode_ = SigmaHatMode::kEqual;
  std::function<double(double)> custom_;
  std::string label_;
};

/// Throws PmlError for r > rho.
SigmaValues eval_profile(const PmlProfile& profile, double r);

struct PmlMatrices {
  double sigma = 0.0;
  double sigma_hat = 0.0;
  cplx alpha{1.0, 0.0};
  cplx beta{1.0, 0.0};
  Tensor2<cplx> A = Tensor2<cplx>::Identity();
  Tensor2<double> Lambda1 = Tensor2<double>::Zero();
  Tensor2<double> Lambda2 = Tensor2<double>::Zero();
};

/// Coefficients at x. Without s only sigma, sigma_hat and the Lambda tensors
/// are filled (time domain). `in_layer` defaults to |x| > R.
PmlMatrices pml_matrices_at(const PmlProfile& profile, Point x,
                            std::optional<ComplexFrequency> s = std::nullopt,
                            std::optional<bool> in_layer = std::nullopt);

/// Operators of the first-order time-domain system on the full mesh (size N
/// for scalar fields, 2N for vector fields with x block first).
struct TimeBlocks {
  RealSparse M;            // (u, v)
  RealSparse M_source;     // (f, v) over the physical region only
  RealSparse M_sum;        // ((sigma + sigma_hat) u, v)
  RealSparse M_sigma;      // (sigma u, v)
  RealSparse M_sigma_hat;  // (sigma_hat u, v)
  RealSparse Bx, By;       // (B_d)_ij = int phi_j d_d phi_i
  RealSparse B;            // [Bx By], N x 2N: (p, grad v)
  RealSparse G;            // B^T, 2N x N: (grad u, q)
  RealSparse M_p;          // blockdiag(M, M)
  RealSparse M_L1, M_L2;   // (Lambda_k p, q)
};

/// Mass matrix restricted to physical triangles.
RealSparse assemble_source_mass(const Mesh& mesh, AssemblyOptions options = {});

TimeBlocks assemble_time_blocks(const Mesh& mesh, const PmlProfile& profile,
                                AssemblyOptions options = {});

struct ComplexSystem {
  ComplexSparse matrix;  // full N x N, before constraints
  ComplexVector rhs;
  std::vector<bool> dirichlet_mask;
};

/// int A grad u . grad conj(v) + s^2 alpha beta u conj(v) = int s f conj(v),
/// with f given as nodal values and integrated over the physical region only;
/// Dirichlet on every boundary vertex.
ComplexSystem assemble_frequency_system(const Mesh& mesh, const PmlProfile& profile,
                                        ComplexFrequency s, const ComplexVector& f_nodal,
                                        AssemblyOptions options = {});

}  // namespace pmlwave
