#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmlwave/pml.hpp"

using namespace pmlwave;

namespace {

const Mesh& small_mesh() {
  static const Mesh m = generate_mesh(SurfaceProfile::default_rough(), {2.0, 3.0, 0.2, {}});
  return m;
}

double max_abs(const RealSparse& a) {
  double worst = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (RealSparse::InnerIterator it(a, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

double max_abs(const ComplexSparse& a) {
  double worst = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (ComplexSparse::InnerIterator it(a, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return worst;
}

ComplexVector random_interior(const Mesh& m, std::mt19937& rng) {
  std::normal_distribution<double> g;
  const auto mask = m.boundary_vertex_mask();
  ComplexVector v(m.vertex_count());
  for (int i = 0; i < v.size(); ++i) v[i] = mask[i] ? cplx(0) : cplx(g(rng), g(rng));
  return v;
}

// Per-element norms with the same edge-midpoint points as the assembly.
struct Norms {
  double grad = 0;      // ||grad v||^2
  double a_grad = 0;    // ||A grad v||^2
  double s_v = 0;       // ||s v||^2
  double sab_v = 0;     // ||s alpha beta v||^2
};

Norms norms(const Mesh& m, const PmlProfile& prof, ComplexFrequency s, const ComplexVector& v) {
  Norms out;
  const cplx sv = s.value();
  for (int k = 0; k < m.triangle_count(); ++k) {
    const auto g = ElementGeometry::of(m, k);
    const auto& t = m.triangles[k];
    Eigen::Vector2cd gv = Eigen::Vector2cd::Zero();
    for (int i = 0; i < 3; ++i) gv += v[t[i]] * g.grad[i].cast<cplx>();
    for (const auto& q : quadrature_rule(Quadrature::kEdgeMidpoint)) {
      const double w = g.area * q.weight;
      const auto c = pml_matrices_at(prof, g.at(q.lambda), s, m.regions[k] == Region::kPml);
      cplx vq = 0;
      for (int i = 0; i < 3; ++i) vq += q.lambda[i] * v[t[i]];
      out.grad += w * gv.squaredNorm();
      out.a_grad += w * (c.A * gv).squaredNorm();
      out.s_v += w * std::norm(sv * vq);
      out.sab_v += w * std::norm(sv * c.alpha * c.beta * vq);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("profile values") {
  const auto c = PmlProfile::constant(2.0, 4.0, 10.0, SigmaHatMode::kIntegral);
  CHECK(eval_profile(c, 3.0).sigma == 10.0);
  CHECK(eval_profile(c, 3.0).sigma_hat == doctest::Approx(10.0 / 3.0).epsilon(1e-15));
  CHECK(c.eval(2.0, true).sigma == 10.0);
  CHECK(c.eval(2.0, true).sigma_hat == 0.0);
  CHECK(eval_profile(c, 2.0).sigma == 0.0);
  CHECK(eval_profile(c, 1.0).sigma_hat == 0.0);
  CHECK_THROWS_AS(eval_profile(c, 4.01), PmlError);

  const auto p = PmlProfile::power(2.0, 3.0, 7.0, 2.0, SigmaHatMode::kIntegral);
  CHECK(eval_profile(p, 3.0).sigma == doctest::Approx(7.0));
  CHECK(eval_profile(p, 3.0).sigma_hat == doctest::Approx(7.0 * 1.0 / 9.0).epsilon(1e-14));
  CHECK(p.eval(2.0, true).sigma == 0.0);
  CHECK(p.eval(2.0, true).sigma_hat == 0.0);

  const auto e = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kEqual);
  CHECK(eval_profile(e, 2.5).sigma_hat == 10.0);
  CHECK(eval_profile(e, 1.5).sigma_hat == 0.0);
  CHECK(e.predicted_exponent() == doctest::Approx(3.0 * 10.0 * (1.0 - 4.0 / 9.0)));
}

TEST_CASE("sigma_hat agrees with quadrature of sigma") {
  auto fn = [](double r) { return r <= 2.0 ? 0.0 : 5.0 * (r - 2.0) + std::pow(r - 2.0, 3); };
  const auto custom = PmlProfile::custom(2.0, 3.5, fn, SigmaHatMode::kIntegral, "cubic");
  const auto power = PmlProfile::power(2.0, 3.5, 12.0, 1.7, SigmaHatMode::kIntegral);
  for (double r = 0.0; r <= 3.5; r += 0.05) {
    const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(fn, 0.0, r) /
                       std::max(r, 1e-300);
    CHECK(std::abs(eval_profile(custom, r).sigma_hat - ref) <= 1e-10);
    auto pw = [](double t) { return t <= 2.0 ? 0.0 : 12.0 * std::pow((t - 2.0) / 1.5, 1.7); };
    const double pref =
        r <= 2.0 ? 0.0
                 : boost::math::quadrature::gauss_kronrod<double, 61>::integrate(pw, 2.0, r, 20, 1e-14) / r;
    CHECK(std::abs(eval_profile(power, r).sigma_hat - pref) <= 1e-10);
  }
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(PmlProfile::constant(2.0, 2.0, 1.0, SigmaHatMode::kEqual), PmlError);
  CHECK_THROWS_AS(PmlProfile::constant(2.0, 3.0, -1.0, SigmaHatMode::kEqual), PmlError);
  CHECK_THROWS_AS(PmlProfile::power(2.0, 3.0, 1.0, 0.0, SigmaHatMode::kEqual), PmlError);
  CHECK_THROWS_AS(PmlProfile::custom(2.0, 3.0, [](double r) { return 5.0 - r; },
                                     SigmaHatMode::kEqual),
                  PmlError);
  CHECK_THROWS_AS(PmlProfile::from_string("power:x", 2, 3, 1, SigmaHatMode::kEqual), PmlError);
  CHECK_THROWS_AS(PmlProfile::from_string("linear", 2, 3, 1, SigmaHatMode::kEqual), PmlError);
  CHECK(PmlProfile::from_string("power:2", 2, 3, 1, SigmaHatMode::kEqual).exponent() == 2.0);
  CHECK(parse_sigma_hat_mode("integral") == SigmaHatMode::kIntegral);
  CHECK_THROWS_AS(parse_sigma_hat_mode("other"), PmlError);
}

TEST_CASE("Lambda tensors on the axes") {
  const auto prof = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kIntegral);
  const auto v = eval_profile(prof, 2.5);
  const auto ax = pml_matrices_at(prof, {2.5, 0.0});
  CHECK(ax.Lambda1(0, 0) == v.sigma);
  CHECK(ax.Lambda1(1, 1) == v.sigma_hat);
  CHECK(ax.Lambda1(0, 1) == 0.0);
  CHECK(ax.Lambda2(0, 0) == v.sigma_hat);
  const auto ay = pml_matrices_at(prof, {0.0, 2.5});
  CHECK(ay.Lambda1(0, 0) == doctest::Approx(v.sigma_hat).epsilon(1e-15));
  CHECK(ay.Lambda1(1, 1) == doctest::Approx(v.sigma).epsilon(1e-15));
  CHECK(std::abs(ay.Lambda1(0, 1)) < 1e-15);

  const auto eq = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kEqual);
  for (double th = 0; th < 3.2; th += 0.3) {
    const auto m = pml_matrices_at(eq, {2.7 * std::cos(th), 2.7 * std::sin(th)});
    CHECK((m.Lambda1 - 10.0 * Tensor2<double>::Identity()).norm() < 1e-14);
    CHECK((m.Lambda2 - m.Lambda1).norm() < 1e-14);
  }
}

TEST_CASE("coefficients in the physical region") {
  const auto prof = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kIntegral);
  const ComplexFrequency s{1.0, 2.0};
  for (Point x : {Point{0.0, 0.0}, Point{1e-20, 0.0}, Point{1.0, 1.0}, Point{2.0, 0.0}}) {
    const auto m = pml_matrices_at(prof, x, s);
    CHECK(m.alpha == cplx(1.0));
    CHECK(m.beta == cplx(1.0));
    CHECK(m.A == Tensor2<cplx>::Identity());
    CHECK(m.Lambda1.isZero(0.0));
    CHECK(m.Lambda2.isZero(0.0));
  }
  const auto layer = pml_matrices_at(prof, {2.5, 0.0}, s);
  CHECK(std::abs(layer.alpha - (1.0 + 10.0 / s.value())) < 1e-15);
  CHECK(std::abs(layer.A(0, 0) - layer.beta / layer.alpha) < 1e-15);
  CHECK(std::abs(layer.A(1, 1) - layer.alpha / layer.beta) < 1e-15);
}

TEST_CASE("Lambda tensors are positive semi-definite") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> r(0.0, 3.0), th(0.0, 2 * std::numbers::pi);
  const auto a = PmlProfile::power(2.0, 3.0, 30.0, 2.0, SigmaHatMode::kIntegral);
  const auto b = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kIntegral);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double rr = r(rng), t = th(rng);
    const auto m = pml_matrices_at(i % 2 ? a : b, {rr * std::cos(t), rr * std::sin(t)});
    for (const auto& L : {m.Lambda1, m.Lambda2}) {
      CHECK((L - L.transpose()).norm() < 1e-14);
      worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Tensor2<double>>(L).eigenvalues()(0));
    }
  }
  CHECK(worst >= -1e-14);
}

TEST_CASE("time blocks") {
  const Mesh& m = small_mesh();
  const int n = m.vertex_count();
  const auto zero = PmlProfile::constant(2.0, 3.0, 0.0, SigmaHatMode::kEqual);
  const auto tb0 = assemble_time_blocks(m, zero);
  CHECK(tb0.M_sigma.nonZeros() == 0);
  CHECK(tb0.M_sum.nonZeros() == 0);
  CHECK(tb0.M_L1.nonZeros() == 0);
  CHECK(tb0.M_L2.nonZeros() == 0);

  const auto eq = PmlProfile::constant(2.0, 3.0, 10.0, SigmaHatMode::kEqual);
  const auto tb = assemble_time_blocks(m, eq);
  CHECK(max_abs(RealSparse(tb.M_L1 - tb.M_L2)) <= 1e-14);
  CHECK(tb.B.rows() == n);
  CHECK(tb.B.cols() == 2 * n);
  CHECK(tb.G.rows() == 2 * n);
  CHECK(tb.M_p.rows() == 2 * n);
  CHECK(max_abs(RealSparse(tb.G - RealSparse(tb.B.transpose()))) == 0.0);
  const DofMap dofs(m);
  CHECK(dofs.total() == dofs.free_u_count() + n + 2 * n + 2 * n);
  CHECK(max_abs(RealSparse(tb.M_sum - tb.M_sigma - tb.M_sigma_hat)) <= 1e-12);

  // Rows of vertices touching only physical triangles vanish.
  std::vector<bool> touches_pml(n, false);
  for (int k = 0; k < m.triangle_count(); ++k)
    if (m.regions[k] == Region::kPml)
      for (int v : m.triangles[k]) touches_pml[v] = true;
  for (int c = 0; c < tb.M_sigma.outerSize(); ++c)
    for (RealSparse::InnerIterator it(tb.M_sigma, c); it; ++it) CHECK(touches_pml[it.row()]);

  // M_sigma applied to ones integrates sigma = 10 over the layer.
  double layer_area = 0;
  for (int k = 0; k < m.triangle_count(); ++k)
    if (m.regions[k] == Region::kPml) layer_area += m.signed_area(k);
  CHECK((tb.M_sigma * RealVector::Ones(n)).sum() == doctest::Approx(10.0 * layer_area).epsilon(1e-12));

  const auto other = PmlProfile::constant(2.0, 4.0, 1.0, SigmaHatMode::kEqual);
  CHECK_THROWS_AS(assemble_time_blocks(m, other), PmlError);
}

TEST_CASE("frequency system without absorption is Helmholtz") {
  const Mesh& m = small_mesh();
  const auto zero = PmlProfile::constant(2.0, 3.0, 0.0, SigmaHatMode::kIntegral);
  const ComplexFrequency s{1.5, 0.7};
  const ComplexVector f = ComplexVector::Ones(m.vertex_count());
  const auto sys = assemble_frequency_system(m, zero, s, f);
  const ComplexSparse ref =
      assemble_stiffness(m).cast<cplx>() + s.value() * s.value() * assemble_mass(m).cast<cplx>();
  CHECK(max_abs(ComplexSparse(sys.matrix - ref)) <= 1e-13);
  const ComplexVector rhs = s.value() * (assemble_source_mass(m).cast<cplx>() * f);
  CHECK((sys.rhs - rhs).norm() <= 1e-13);
  CHECK(sys.dirichlet_mask == m.boundary_vertex_mask());
  CHECK_THROWS_AS(assemble_frequency_system(m, zero, {0.0, 1.0}, f), BesselDomainError);
  CHECK_THROWS_AS(assemble_frequency_system(m, zero, s, ComplexVector::Ones(3)), std::invalid_argument);
}

TEST_CASE("coercivity of the PML form") {
  const Mesh& m = small_mesh();
  std::mt19937 rng(11);
  const ComplexFrequency s{1.0, 2.0};
  const double s1 = 1.0, s2 = 2.0, sigma_rho = 10.0;
  for (auto mode : {SigmaHatMode::kIntegral, SigmaHatMode::kEqual}) {
    const auto prof = PmlProfile::constant(2.0, 3.0, sigma_rho, mode);
    const auto sys = assemble_frequency_system(m, prof, s, ComplexVector::Zero(m.vertex_count()));
    for (int trial = 0; trial < 50; ++trial) {
      const ComplexVector v = random_interior(m, rng);
      const cplx a = v.dot(sys.matrix * v);  // v^H A v
      const Norms nm = norms(m, prof, s, v);
      const double scale = nm.a_grad + nm.sab_v;
      const double c = s1 / (s1 + sigma_rho);
      CHECK(a.real() + s2 / (s1 + sigma_rho) * a.imag() >= c * c * scale - 1e-8 * scale);
      const double lb = c * c * (s1 / std::abs(s.value())) *
                        std::norm(s1 / (s.value() + sigma_rho)) * (nm.grad + nm.s_v);
      CHECK(std::abs(a) >= lb * (1.0 - 1e-8));
    }
  }
}

TEST_CASE("real frequency gives a positive Hermitian part") {
  const Mesh& m = small_mesh();
  std::mt19937 rng(5);
  const auto prof = PmlProfile::power(2.0, 3.0, 25.0, 2.0, SigmaHatMode::kIntegral);
  const auto sys = assemble_frequency_system(m, prof, {0.8, 0.0}, ComplexVector::Zero(m.vertex_count()));
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexVector v = random_interior(m, rng);
    CHECK(v.dot(sys.matrix * v).real() > 0.0);
  }
}

TEST_CASE("serial and parallel time blocks agree") {
  const Mesh& m = small_mesh();
  const auto prof = PmlProfile::power(2.0, 3.0, 20.0, 2.0, SigmaHatMode::kIntegral);
  const auto a = assemble_time_blocks(m, prof, {Quadrature::kEdgeMidpoint, Execution::kSerial});
  const auto b = assemble_time_blocks(m, prof, {Quadrature::kEdgeMidpoint, Execution::kParallel});
  CHECK(max_abs(RealSparse(a.M_L1 - b.M_L1)) == 0.0);
  CHECK(max_abs(RealSparse(a.M_sum - b.M_sum)) == 0.0);
}

TEST_CASE("source mass covers only the physical region") {
  const Mesh& m = small_mesh();
  const RealSparse Ms = assemble_source_mass(m);
  const RealVector ones = RealVector::Ones(m.vertex_count());
  const double physical = ones.dot(Ms * ones);
  double area = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k)
    if (m.regions[k] == Region::kPhysical) area += std::abs(m.signed_area(k));
  CHECK(physical == doctest::Approx(area).epsilon(1e-12));
  CHECK(ones.dot(assemble_mass(m) * ones) > physical);
}
