#include "pmlwave/pml.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

namespace pmlwave {

std::string to_string(SigmaHatMode mode) {
  return mode == SigmaHatMode::kEqual ? "equal" : "integral";
}

SigmaHatMode parse_sigma_hat_mode(const std::string& text) {
  if (text == "equal") return SigmaHatMode::kEqual;
  if (text == "integral") return SigmaHatMode::kIntegral;
  throw PmlError("sigma_hat_mode must be 'equal' or 'integral', got '" + text + "'");
}

namespace {

void check_radii(double R, double rho) {
  if (!(R > 0.0) || !(rho > R)) {
    std::ostringstream err;
    err << "PML needs 0 < R < rho, got R=" << R << " rho=" << rho;
    throw PmlError(err.str());
  }
}

void check_sigma0(double sigma0) {
  if (!(sigma0 >= 0.0) || !std::isfinite(sigma0))
    throw PmlError("PML strength must be finite and >= 0, got " + std::to_string(sigma0));
}

}  // namespace

PmlProfile PmlProfile::constant(double R, double rho, double sigma0, SigmaHatMode mode) {
  check_radii(R, rho);
  check_sigma0(sigma0);
  PmlProfile p;
  p.R_ = R;
  p.rho_ = rho;
  p.sigma0_ = sigma0;
  p.kind_ = ProfileKind::kConstant;
  p.mode_ = mode;
  return p;
}

PmlProfile PmlProfile::power(double R, double rho, double sigma0, double exponent,
                             SigmaHatMode mode) {
  check_radii(R, rho);
  check_sigma0(sigma0);
  if (!(exponent > 0.0)) throw PmlError("power profile exponent must be > 0");
  PmlProfile p = constant(R, rho, sigma0, mode);
  p.kind_ = ProfileKind::kPower;
  p.p_ = exponent;
  return p;
}

PmlProfile PmlProfile::custom(double R, double rho, std::function<double(double)> sigma,
                              SigmaHatMode mode, std::string label) {
  check_radii(R, rho);
  if (!sigma) throw PmlError("custom profile needs a function");
  // Sampled check of sign and monotonicity on [R, rho].
  constexpr int kSamples = 1000;
  double prev = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = R + (rho - R) * i / kSamples;
    const double v = sigma(r);
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream err;
      err << "custom sigma(" << r << ") = " << v << " is not a finite non-negative value";
      throw PmlError(err.str());
    }
    if (i > 0 && v < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
      std::ostringstream err;
      err << "custom sigma decreases near r=" << r;
      throw PmlError(err.str());
    }
    prev = v;
  }
  PmlProfile p;
  p.R_ = R;
  p.rho_ = rho;
  p.sigma0_ = prev;
  p.kind_ = ProfileKind::kCustom;
  p.mode_ = mode;
  p.custom_ = std::move(sigma);
  p.label_ = std::move(label);
  return p;
}

PmlProfile PmlProfile::from_string(const std::string& kind, double R, double rho, double sigma0,
                                 SigmaHatMode mode) {
  if (kind == "constant") return constant(R, rho, sigma0, mode);
  if (kind.rfind("power:", 0) == 0) {
    const std::string tail = kind.substr(6);
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tail.size()) throw PmlError("bad power exponent in '" + kind + "'");
    return power(R, rho, sigma0, p, mode);
  }
  throw PmlError("unknown PML profile '" + kind + "' (constant, power:<p>)");
}

double PmlProfile::sigma_layer(double r) const {
  switch (kind_) {
    case ProfileKind::kConstant: return sigma0_;
    case ProfileKind::kPower: return sigma0_ * std::pow((r - R_) / (rho_ - R_), p_);
    case ProfileKind::kCustom: return custom_(r);
  }
  return 0.0;
}

double PmlProfile::integral(double r) const {
  const double d = r - R_;
  if (d <= 0.0) return 0.0;
  switch (kind_) {
    case ProfileKind::kConstant: return sigma0_ * d;
    case ProfileKind::kPower: {
      const double w = rho_ - R_;
      return sigma0_ * w / (p_ + 1.0) * std::pow(d / w, p_ + 1.0);
    }
    case ProfileKind::kCustom:
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(custom_, R_, r, 15, 1e-13);
  }
  return 0.0;
}

SigmaValues PmlProfile::eval(double r, bool in_layer) const {
  if (!(r >= 0.0)) throw PmlError("radius must be >= 0");
  if (r > rho_ * (1.0 + 1e-12)) {
    std::ostringstream err;
    err.precision(17);
    err << "radius " << r << " lies outside the layer (rho = " << rho_ << ")";
    throw PmlError(err.str());
  }
  if (!in_layer) return {};
  const double rr = std::min(std::max(r, R_), rho_);
  SigmaValues v;
  v.sigma = sigma_layer(rr);
  v.sigma_hat = mode_ == SigmaHatMode::kEqual ? v.sigma : integral(rr) / rr;
  return v;
}

std::string PmlProfile::description() const {
  std::ostringstream out;
  switch (kind_) {
    case ProfileKind::kConstant: out << "constant sigma=" << sigma0_; break;
    case ProfileKind::kPower: out << "power:" << p_ << " sigma0=" << sigma0_; break;
    case ProfileKind::kCustom: out << label_; break;
  }
  out << " sigma_hat=" << to_string(mode_) << " R=" << R_ << " rho=" << rho_;
  return out.str();
}

double PmlProfile::predicted_exponent() const {
  const double sh = eval(rho_, true).sigma_hat;
  return rho_ * sh * (1.0 - (R_ * R_) / (rho_ * rho_));
}

SigmaValues eval_profile(const PmlProfile& profile, double r) { return profile.eval(r); }

PmlMatrices pml_matrices_at(const PmlProfile& profile, Point x, std::optional<ComplexFrequency> s,
                            std::optional<bool> in_layer) {
  const double r = norm(x);
  const bool layer = in_layer.value_or(r > profile.R());
  PmlMatrices out;
  if (!layer) return out;
  const SigmaValues v = profile.eval(r, true);
  out.sigma = v.sigma;
  out.sigma_hat = v.sigma_hat;
  Tensor2<double> M = Tensor2<double>::Identity();
  if (r >= 1e-14) {
    const double c = x.x / r, sn = x.y / r;
    M << c, sn, -sn, c;
  }
  out.Lambda1 = M.transpose() * Eigen::Vector2d(v.sigma, v.sigma_hat).asDiagonal() * M;
  out.Lambda2 = M.transpose() * Eigen::Vector2d(v.sigma_hat, v.sigma).asDiagonal() * M;
  if (s) {
    const cplx sv = s->value();
    out.alpha = 1.0 + v.sigma / sv;
    out.beta = 1.0 + v.sigma_hat / sv;
    const Tensor2<cplx> Mc = M.cast<cplx>();
    Tensor2<cplx> D = Tensor2<cplx>::Zero();
    D(0, 0) = out.beta / out.alpha;
    D(1, 1) = out.alpha / out.beta;
    out.A = Mc.transpose() * D * Mc;
  }
  return out;
}

namespace {

bool in_pml(const Mesh& mesh, int triangle) { return mesh.regions[triangle] == Region::kPml; }

}  // namespace

RealSparse assemble_source_mass(const Mesh& mesh, AssemblyOptions options) {
  return assemble_mass<double>(
      mesh, [&](Point, int k) { return in_pml(mesh, k) ? 0.0 : 1.0; }, options);
}

TimeBlocks assemble_time_blocks(const Mesh& mesh, const PmlProfile& profile,
                                AssemblyOptions options) {
  if (std::abs(mesh.R - profile.R()) > 1e-12 || std::abs(mesh.rho - profile.rho()) > 1e-12) {
    std::ostringstream err;
    err << "mesh (R=" << mesh.R << ", rho=" << mesh.rho << ") and profile (R=" << profile.R()
        << ", rho=" << profile.rho() << ") disagree";
    throw PmlError(err.str());
  }
  auto values = [&](Point p, int k) {
    return in_pml(mesh, k) ? profile.eval(norm(p), true) : SigmaValues{};
  };
  TimeBlocks b;
  const int n = mesh.vertex_count();
  b.M = assemble_mass(mesh, options);
  b.M_source = assemble_source_mass(mesh, options);
  b.M_sum = assemble_mass<double>(
      mesh, [&](Point p, int k) { auto v = values(p, k); return v.sigma + v.sigma_hat; }, options);
  b.M_sigma = assemble_mass<double>(mesh, [&](Point p, int k) { return values(p, k).sigma; }, options);
  b.M_sigma_hat =
      assemble_mass<double>(mesh, [&](Point p, int k) { return values(p, k).sigma_hat; }, options);
  std::tie(b.Bx, b.By) = assemble_gradient_coupling(mesh, options);
  b.B = compose_blocks<double>(n, 2 * n, {{0, 0, &b.Bx, 1.0}, {0, n, &b.By, 1.0}});
  b.G = b.B.transpose();
  b.M_p = compose_blocks<double>(2 * n, 2 * n, {{0, 0, &b.M, 1.0}, {n, n, &b.M, 1.0}});
  auto lambda = [&](bool first) {
    return [&, first](Point p, int k) -> Tensor2<double> {
      if (!in_pml(mesh, k)) return Tensor2<double>::Zero();
      const auto m = pml_matrices_at(profile, p, std::nullopt, true);
      return first ? m.Lambda1 : m.Lambda2;
    };
  };
  b.M_L1 = assemble_tensor_mass<double>(mesh, lambda(true), options);
  b.M_L2 = assemble_tensor_mass<double>(mesh, lambda(false), options);
  return b;
}

ComplexSystem assemble_frequency_system(const Mesh& mesh, const PmlProfile& profile,
                                        ComplexFrequency s, const ComplexVector& f_nodal,
                                        AssemblyOptions options) {
  s.validate();
  if (f_nodal.size() != mesh.vertex_count()) {
    std::ostringstream err;
    err << "source has " << f_nodal.size() << " values, mesh has " << mesh.vertex_count()
        << " vertices";
    throw std::invalid_argument(err.str());
  }
  const cplx sv = s.value();
  auto coeffs = [&](Point p, int k) {
    return pml_matrices_at(profile, p, s, in_pml(mesh, k));
  };
  const ComplexSparse K = assemble_stiffness<cplx>(
      mesh, [&](Point p, int k) { return coeffs(p, k).A; }, options);
  const ComplexSparse Ms = assemble_mass<cplx>(
      mesh,
      [&](Point p, int k) {
        const auto c = coeffs(p, k);
        return sv * sv * c.alpha * c.beta;
      },
      options);
  ComplexSystem sys;
  sys.matrix = K + Ms;
  const ComplexSparse M = assemble_source_mass(mesh, options).cast<cplx>();
  sys.rhs = sv * (M * f_nodal);
  sys.dirichlet_mask = mesh.boundary_vertex_mask();
  return sys;
}

}  // namespace pmlwave
