#include "pmlwave/laplace.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmlwave {

TimeSignal TimeSignal::sample(const std::function<cplx(double)>& u, double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("TimeSignal: T and dt must be > 0");
  const auto n = static_cast<std::size_t>(std::llround(T / dt));
  if (std::abs(n * dt - T) > 1e-9 * T) throw std::invalid_argument("TimeSignal: T is not a multiple of dt");
  TimeSignal s;
  s.dt = dt;
  s.samples.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) s.samples[k] = u(k * dt);
  return s;
}

bool TimeSignal::is_real() const {
  for (const auto& v : samples)
    if (v.imag() != 0.0) return false;
  return true;
}

namespace {

// Simpson over samples g_k of a product already formed.
cplx simpson(const std::vector<cplx>& g, double h) {
  const std::size_t n = g.size() - 1;  // intervals
  if (n == 0) return 0.0;
  if (n == 1) return 0.5 * h * (g[0] + g[1]);
  std::size_t even = n % 2 ? n - 3 : n;
  cplx sum = 0.0;
  if (even > 0) {
    cplx acc = g[0] + g[even];
    for (std::size_t k = 1; k < even; ++k) acc += (k % 2 ? 4.0 : 2.0) * g[k];
    sum = acc * h / 3.0;
  }
  if (n % 2) sum += 3.0 * h / 8.0 * (g[even] + 3.0 * g[even + 1] + 3.0 * g[even + 2] + g[even + 3]);
  return sum;
}

}  // namespace

cplx laplace_forward(const TimeSignal& signal, ComplexFrequency s) {
  s.validate();
  if (signal.samples.empty()) return 0.0;
  const cplx sv = s.value();
  // e^{-s t_k} by repeated multiplication drifts; use the exponent directly.
  std::vector<cplx> g(signal.samples.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::exp(-sv * (k * signal.dt)) * signal.samples[k];
  return simpson(g, signal.dt);
}

TimeSignal backward_difference(const TimeSignal& signal) {
  TimeSignal d{signal.dt, std::vector<cplx>(signal.samples.size(), 0.0)};
  for (std::size_t k = 1; k < d.samples.size(); ++k)
    d.samples[k] = (signal.samples[k] - signal.samples[k - 1]) / signal.dt;
  return d;
}

TimeSignal cumulative_trapezoid(const TimeSignal& signal) {
  TimeSignal c{signal.dt, std::vector<cplx>(signal.samples.size(), 0.0)};
  for (std::size_t k = 1; k < c.samples.size(); ++k)
    c.samples[k] = c.samples[k - 1] + 0.5 * signal.dt * (signal.samples[k] + signal.samples[k - 1]);
  return c;
}

ParsevalResult parseval_check(const TimeSignal& u, const TimeSignal& v, double s1, double S) {
  if (u.dt != v.dt || u.samples.size() != v.samples.size())
    throw std::invalid_argument("parseval_check: signals must share the time grid");
  if (!(S > 0.0)) throw std::invalid_argument("parseval_check: S must be > 0");
  ComplexFrequency{s1, 0.0}.validate();
  ParsevalResult r;
  std::vector<cplx> g(u.samples.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = std::exp(-2.0 * s1 * k * u.dt) * u.samples[k] * std::conj(v.samples[k]);
  r.rhs = simpson(g, u.dt).real();

  auto product = [&](double s2) {
    return (laplace_forward(u, {s1, s2}) * std::conj(laplace_forward(v, {s1, s2}))).real();
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double integral = 0.0;
  if (u.is_real() && v.is_real()) {
    // u_L(conj s) = conj u_L(s)
    integral = 2.0 * GK::integrate(product, 0.0, S, 12, 1e-12);
    r.tail = 2.0 * S * product(S);
  } else {
    integral = GK::integrate(product, -S, S, 12, 1e-12);
    r.tail = S * (product(S) + product(-S));
  }
  r.lhs = (integral + r.tail) / (2.0 * std::numbers::pi);
  r.tail /= 2.0 * std::numbers::pi;
  const double diff = std::abs(r.lhs - r.rhs);
  r.gap = r.rhs != 0.0 ? diff / std::abs(r.rhs) : diff;
  return r;
}

}  // namespace pmlwave
