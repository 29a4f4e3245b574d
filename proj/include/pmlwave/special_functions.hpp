#pragma once

#include <complex>
#include <stdexcept>

namespace pmlwave {

using cplx = std::complex<double>;

/// Laplace variable s = s1 + i s2, always with s1 > 0.
struct ComplexFrequency {
  double s1 = 1.0;
  double s2 = 0.0;

  cplx value() const { return {s1, s2}; }
  void validate() const;
};

class BesselDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by bessel_k when the value does not fit in a double.
class BesselRangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// mantissa * 2^exponent, with |mantissa| in [0.5, 1).
struct ScaledComplex {
  cplx mantissa{0.0, 0.0};
  long exponent = 0;

  cplx value() const;             // may overflow or flush to zero
  double log2_abs() const;        // log2 |value|
};

/// |a| / |b| without forming either value.
double abs_ratio(const ScaledComplex& a, const ScaledComplex& b);

inline constexpr int kDefaultMaxBesselOrder = 64;

/// Modified Bessel function of the second kind K_nu(z) for integer nu >= 0
/// and Re z > 0.
cplx bessel_k(int nu, cplx z, int max_order = kDefaultMaxBesselOrder);
ScaledComplex bessel_k_scaled(int nu, cplx z, int max_order = kDefaultMaxBesselOrder);

/// e^z K_0(z) and e^z K_1(z).
void bessel_k01_exp_scaled(cplx z, cplx& k0, cplx& k1);

/// K_n'(sR) / K_n(sR) for n >= 1.
cplx dtn_ratio(int n, ComplexFrequency s, double R);

struct DecayBound {
  double lhs = 0.0;  // |K_nu(s rho1 + tau)| / |K_nu(s rho2)|
  double rhs = 0.0;  // exp(-tau (1 - rho2^2/rho1^2))
  bool holds(double rel_slack = 1e-8) const { return lhs <= rhs * (1.0 + rel_slack); }
};

DecayBound decay_ratio_bound_check(int nu, ComplexFrequency s, double rho1, double rho2,
                                   double tau);

}  // namespace pmlwave
