#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pmlwave/special_functions.hpp"

using namespace pmlwave;

namespace {

// K_nu(z) = sqrt(pi/(2z)) e^{-z} / Gamma(nu+1/2) * int_0^inf e^{-u} u^{nu-1/2} (1 + u/(2z))^{nu-1/2} du
// with u = t^2. Returns e^z K_nu(z).
cplx oracle_scaled_k(int nu, cplx z) {
  const double lg = std::lgamma(nu + 0.5);
  auto integrand = [&](double t, bool imag) {
    if (t == 0.0) return 0.0 + (nu == 0 && !imag ? 2.0 * std::exp(-lg) : 0.0);
    const cplx expo = -t * t + 2.0 * nu * std::log(t) - lg +
                      (nu - 0.5) * std::log(1.0 + t * t / (2.0 * z));
    if (expo.real() < -700.0) return 0.0;
    const cplx f = 2.0 * std::exp(expo);
    return imag ? f.imag() : f.real();
  };
  boost::math::quadrature::exp_sinh<double> quad;
  const double re = quad.integrate([&](double t) { return integrand(t, false); }, 1e-15);
  const double im = quad.integrate([&](double t) { return integrand(t, true); }, 1e-15);
  return std::sqrt(std::numbers::pi / (2.0 * z)) * cplx(re, im);
}

// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt for real x.
double oracle_cosh(int nu, double x) {
  boost::math::quadrature::tanh_sinh<double> quad;
  return quad.integrate(
      [&](double t) { return std::exp(-x * std::cosh(t)) * std::cosh(nu * t); }, 0.0,
      std::acosh(800.0 / x), 1e-15);
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("K0(1) and K1(1)") {
  CHECK(oracle_cosh(0, 1.0) == doctest::Approx(0.42102443824070834).epsilon(1e-13));
  CHECK(oracle_cosh(1, 1.0) == doctest::Approx(0.6019072301972346).epsilon(1e-13));
  CHECK(rel(bessel_k(0, 1.0), 0.42102443824070834) < 1e-14);
  CHECK(rel(bessel_k(1, 1.0), 0.6019072301972346) < 1e-14);
  for (double x : {0.05, 0.7, 2.5, 9.0, 40.0}) {
    for (int nu : {0, 1, 3, 8}) {
      CHECK(rel(bessel_k(nu, x), oracle_cosh(nu, x)) < 1e-10);
    }
  }
}

TEST_CASE("quadrature oracle on random complex points") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double r = 0.1 + 99.9 * unit(rng);
    const double arg = (unit(rng) - 0.5) * std::numbers::pi * 0.98;
    const int nu = static_cast<int>(21 * unit(rng));
    const cplx z = std::polar(r, arg);
    const cplx mine = bessel_k(nu, z) * std::exp(z);
    const double err = rel(mine, oracle_scaled_k(nu, z));
    worst = std::max(worst, err);
    CHECK_MESSAGE(err < 1e-10, "nu=" << nu << " z=" << z);
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("recurrence identity") {
  const cplx z(2.0, 3.0);
  const int n = 5;
  const cplx lhs = bessel_k(n + 1, z) - bessel_k(n - 1, z);
  CHECK(rel(lhs, 2.0 * n / z * bessel_k(n, z)) < 1e-9);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const cplx zz = std::polar(1.0 + 99.0 * unit(rng), (unit(rng) - 0.5) * 3.1);
    const int m = 1 + static_cast<int>(39 * unit(rng));
    const auto a = bessel_k_scaled(m + 1, zz), b = bessel_k_scaled(m - 1, zz),
               c = bessel_k_scaled(m, zz);
    // Normalise everything to the exponent of K_{m+1}.
    auto at = [&](const ScaledComplex& k) { return k.mantissa * std::exp2(double(k.exponent - a.exponent)); };
    const cplx res = at(a) - at(b) - 2.0 * m / zz * at(c);
    CHECK(std::abs(res) < 1e-9 * std::abs(at(a)));
  }
}

TEST_CASE("large arguments use the asymptotic branch") {
  for (cplx z : {cplx(1500.0, 0.0), cplx(800.0, 900.0), cplx(5.0, 2000.0)}) {
    for (int nu : {0, 1, 4}) {
      const auto k = bessel_k_scaled(nu, z);
      cplx e = std::exp(std::log(k.mantissa) + double(k.exponent) * std::numbers::ln2 + z);
      CHECK(rel(e, oracle_scaled_k(nu, z)) < 1e-8);
    }
  }
}

TEST_CASE("scaled representation") {
  const auto a = bessel_k_scaled(0, 100.0), b = bessel_k_scaled(0, 50.0);
  const double ratio = abs_ratio(a, b);
  // Leading Hankel terms: sqrt(pi/2x) e^{-x} (1 - 1/(8x)).
  const double asym = std::exp(-50.0) * std::sqrt(0.5) * (1.0 - 1.0 / 800.0) / (1.0 - 1.0 / 400.0);
  CHECK(std::abs(ratio - asym) / asym < 1e-3);

  long prev = bessel_k_scaled(0, 1.01).exponent;
  for (double x = 2.0; x < 700.0; x += 1.0) {
    const long e = bessel_k_scaled(0, x).exponent;
    CHECK(e <= prev);
    prev = e;
  }
  CHECK(bessel_k_scaled(0, 700.0).exponent < bessel_k_scaled(0, 2.0).exponent);

  for (int nu : {0, 1, 7, 30}) {
    for (cplx z : {cplx(0.3, 0.1), cplx(3.0, -4.0), cplx(60.0, 10.0)}) {
      const auto k = bessel_k_scaled(nu, z);
      CHECK(std::abs(k.mantissa) >= 0.5);
      CHECK(std::abs(k.mantissa) < 2.0);
      CHECK(rel(k.value(), bessel_k(nu, z)) < 1e-12);
    }
  }
  // Deep decay: K_0(2000) underflows a double but not the scaled form.
  const auto deep = bessel_k_scaled(0, 2000.0);
  const double expected =
      -2000.0 + 0.5 * std::log(std::numbers::pi / 4000.0) + std::log1p(-1.0 / 16000.0);
  CHECK(deep.log2_abs() == doctest::Approx(expected / std::numbers::ln2).epsilon(1e-10));
  CHECK_THROWS_AS(bessel_k(0, 2000.0), BesselRangeError);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(bessel_k(0, cplx(0.0, 1.0)), BesselDomainError);
  CHECK_THROWS_AS(bessel_k(0, cplx(-1.0, 0.0)), BesselDomainError);
  CHECK_THROWS_AS(bessel_k(65, 1.0), BesselDomainError);
  CHECK_NOTHROW(bessel_k(65, 1.0, 100));
  CHECK_THROWS_AS(dtn_ratio(1, {0.0, 1.0}, 2.0), BesselDomainError);
  CHECK_THROWS_AS(decay_ratio_bound_check(0, {1.0, 0.0}, 2.0, 3.0, 1.0), BesselDomainError);
  CHECK_THROWS_AS(decay_ratio_bound_check(0, {1.0, 0.0}, 3.0, 2.0, 0.0), BesselDomainError);
}

TEST_CASE("dtn ratio") {
  // Against the derivative identity with independently computed values.
  const ComplexFrequency s{0.7, -3.0};
  const double R = 2.0;
  const cplx z = s.value() * R;
  for (int n : {1, 2, 9, 25}) {
    const cplx kp = -bessel_k(n - 1, z) - double(n) / z * bessel_k(n, z);
    CHECK(rel(dtn_ratio(n, s, R), kp / bessel_k(n, z)) < 1e-12);
  }
  for (int n = 1; n <= 40; ++n) {
    for (double s1 : {0.1, 1.0, 10.0}) {
      for (int s2 = -50; s2 <= 50; s2 += 5) {
        const ComplexFrequency f{s1, double(s2)};
        const cplx r = dtn_ratio(n, f, 2.0);
        CHECK(-r.real() >= -1e-12);
        CHECK(std::abs(r) <= n / (std::abs(f.value()) * 2.0) + 1.0 + 1e-10);
      }
    }
  }
  const cplx big = dtn_ratio(200, {1.0, 0.0}, 1.0);
  CHECK(std::abs(std::abs(big) / 200.0 - 1.0) < 0.05);
}

TEST_CASE("decay ratio bound") {
  const auto a = decay_ratio_bound_check(0, {1.0, 0.0}, 3.0, 2.0, 5.0);
  CHECK(a.rhs == doctest::Approx(std::exp(-5.0 * 5.0 / 9.0)));
  CHECK(a.holds());
  const cplx direct = bessel_k(0, 8.0) / bessel_k(0, 2.0);
  CHECK(a.lhs == doctest::Approx(std::abs(direct)).epsilon(1e-12));

  const auto b = decay_ratio_bound_check(10, {0.5, 20.0}, 3.4, 2.0, 10.0);
  CHECK(b.rhs == doctest::Approx(1.45e-3).epsilon(1e-2));
  CHECK(b.holds());

  const auto c = decay_ratio_bound_check(3, {1.0, 2.0}, 3.0, 2.0, 1e-9);
  CHECK(c.rhs == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(c.holds());
}
