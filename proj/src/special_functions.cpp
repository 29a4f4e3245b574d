// K_0 and K_1 come from the Temme series (|z| <= 2), Steed's continued
// fraction CF2 (2 < |z| <= 1000) or the Hankel asymptotic series; higher
// orders follow by forward recurrence, which is stable for the dominant K.

#include "pmlwave/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pmlwave {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSeriesRadius = 2.0;
constexpr double kAsymptoticRadius = 1000.0;
constexpr int kRescaleBits = 600;

void check_argument(int nu, cplx z, int max_order) {
  if (!(z.real() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    std::ostringstream err;
    err << "bessel_k requires Re z > 0, got z = " << z;
    throw BesselDomainError(err.str());
  }
  if (nu < 0 || nu > max_order) {
    std::ostringstream err;
    err << "bessel_k order " << nu << " outside [0, " << max_order << "]";
    throw BesselDomainError(err.str());
  }
}

void temme_series(cplx z, cplx& k0, cplx& k1) {
  const cplx x2 = 0.5 * z;
  cplx ff = -std::log(x2) - std::numbers::egamma;
  cplx p = 0.5, q = 0.5, c = 1.0;
  const cplx d = x2 * x2;
  cplx sum = ff, sum1 = p;
  for (int i = 1; i < 500; ++i) {
    ff = (static_cast<double>(i) * ff + p + q) / static_cast<double>(i * i);
    c *= d / static_cast<double>(i);
    p /= static_cast<double>(i);
    q /= static_cast<double>(i);
    const cplx del = c * ff;
    sum += del;
    const cplx del1 = c * p - static_cast<double>(i) * del;
    sum1 += del1;
    if (std::abs(del) < std::abs(sum) * kEps && std::abs(del1) < std::abs(sum1) * kEps) break;
  }
  const cplx scale = std::exp(z);
  k0 = sum * scale;
  k1 = sum1 * (2.0 / z) * scale;
}

void steed_cf2(cplx z, cplx& k0, cplx& k1) {
  cplx b = 2.0 * (1.0 + z);
  cplx d = 1.0 / b;
  cplx h = d, delh = d;
  cplx q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25;
  cplx q = a1, c = a1;
  double a = -a1;
  cplx s = 1.0 + q * delh;
  int i = 1;
  for (; i < 200000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const cplx qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const cplx dels = q * delh;
    s += dels;
    if (std::abs(dels) < std::abs(s) * kEps * 0.5) break;
  }
  if (i == 200000) {
    std::ostringstream err;
    err << "continued fraction for K_0, K_1 did not converge at z = " << z;
    throw std::runtime_error(err.str());
  }
  h *= a1;
  k0 = std::sqrt(std::numbers::pi / (2.0 * z)) / s;
  k1 = k0 * (z + 0.5 - h) / z;
}

cplx hankel_asymptotic(int nu, cplx z) {
  const double mu = 4.0 * nu * nu;
  cplx term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const cplx next = term * (mu - odd * odd) / (8.0 * k * z);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < kEps * std::abs(sum)) break;
  }
  return std::sqrt(std::numbers::pi / (2.0 * z)) * sum;
}

// Multiplies m by e^{-z} in (mantissa, exponent) form.
ScaledComplex attach_exponential(cplx m, long exponent, cplx z) {
  const double l2 = -z.real() / std::numbers::ln2;
  const double whole = std::floor(l2);
  const cplx phase = std::polar(std::exp2(l2 - whole), -z.imag());
  ScaledComplex out;
  out.mantissa = m * phase;
  out.exponent = exponent + static_cast<long>(whole);
  if (out.mantissa == cplx(0.0)) {
    out.exponent = 0;
    return out;
  }
  int e = 0;
  std::frexp(std::abs(out.mantissa), &e);
  out.mantissa = {std::ldexp(out.mantissa.real(), -e), std::ldexp(out.mantissa.imag(), -e)};
  out.exponent += e;
  return out;
}

}  // namespace

void ComplexFrequency::validate() const {
  if (!(s1 > 0.0) || !std::isfinite(s1) || !std::isfinite(s2)) {
    std::ostringstream err;
    err << "Laplace frequency needs s1 > 0, got s = " << s1 << " + " << s2 << "i";
    throw BesselDomainError(err.str());
  }
}

cplx ScaledComplex::value() const {
  return {std::ldexp(mantissa.real(), static_cast<int>(exponent)),
          std::ldexp(mantissa.imag(), static_cast<int>(exponent))};
}

double ScaledComplex::log2_abs() const {
  return std::log2(std::abs(mantissa)) + static_cast<double>(exponent);
}

double abs_ratio(const ScaledComplex& a, const ScaledComplex& b) {
  return std::abs(a.mantissa) / std::abs(b.mantissa) *
         std::exp2(static_cast<double>(a.exponent - b.exponent));
}

void bessel_k01_exp_scaled(cplx z, cplx& k0, cplx& k1) {
  check_argument(0, z, 1);
  const double r = std::abs(z);
  if (r <= kSeriesRadius) {
    temme_series(z, k0, k1);
  } else if (r <= kAsymptoticRadius) {
    steed_cf2(z, k0, k1);
  } else {
    k0 = hankel_asymptotic(0, z);
    k1 = hankel_asymptotic(1, z);
  }
}

ScaledComplex bessel_k_scaled(int nu, cplx z, int max_order) {
  check_argument(nu, z, max_order);
  cplx k0, k1;
  bessel_k01_exp_scaled(z, k0, k1);
  if (nu == 0) return attach_exponential(k0, 0, z);
  if (nu == 1) return attach_exponential(k1, 0, z);
  long exponent = 0;
  cplx prev = k0, cur = k1;
  const cplx two_over_z = 2.0 / z;
  const double limit = std::ldexp(1.0, kRescaleBits);
  for (int n = 1; n < nu; ++n) {
    const cplx next = prev + static_cast<double>(n) * two_over_z * cur;
    prev = cur;
    cur = next;
    if (std::abs(cur) > limit) {
      prev = {std::ldexp(prev.real(), -kRescaleBits), std::ldexp(prev.imag(), -kRescaleBits)};
      cur = {std::ldexp(cur.real(), -kRescaleBits), std::ldexp(cur.imag(), -kRescaleBits)};
      exponent += kRescaleBits;
    }
  }
  return attach_exponential(cur, exponent, z);
}

cplx bessel_k(int nu, cplx z, int max_order) {
  const ScaledComplex k = bessel_k_scaled(nu, z, max_order);
  if (k.exponent > std::numeric_limits<double>::max_exponent ||
      k.exponent < std::numeric_limits<double>::min_exponent) {
    std::ostringstream err;
    err << "K_" << nu << "(" << z << ") = 2^" << k.log2_abs()
        << " is outside double range; use bessel_k_scaled";
    throw BesselRangeError(err.str());
  }
  return k.value();
}

cplx dtn_ratio(int n, ComplexFrequency s, double R) {
  s.validate();
  if (n < 1) throw BesselDomainError("dtn_ratio needs n >= 1");
  if (!(R > 0.0)) throw BesselDomainError("dtn_ratio needs R > 0");
  const cplx z = s.value() * R;
  cplx k0, k1;
  bessel_k01_exp_scaled(z, k0, k1);
  // q_m = K_m / K_{m-1}
  cplx q = k1 / k0;
  for (int m = 1; m < n; ++m) q = 1.0 / q + 2.0 * m / z;
  return -1.0 / q - static_cast<double>(n) / z;
}

DecayBound decay_ratio_bound_check(int nu, ComplexFrequency s, double rho1, double rho2,
                                   double tau) {
  s.validate();
  if (!(rho2 > 0.0) || !(rho1 > rho2)) throw BesselDomainError("decay bound needs rho1 > rho2 > 0");
  if (!(tau > 0.0)) throw BesselDomainError("decay bound needs tau > 0");
  const cplx sv = s.value();
  const int max_order = std::max(nu, kDefaultMaxBesselOrder);
  DecayBound out;
  out.lhs = abs_ratio(bessel_k_scaled(nu, sv * rho1 + tau, max_order),
                      bessel_k_scaled(nu, sv * rho2, max_order));
  out.rhs = std::exp(-tau * (1.0 - rho2 * rho2 / (rho1 * rho1)));
  return out;
}

}  // namespace pmlwave
