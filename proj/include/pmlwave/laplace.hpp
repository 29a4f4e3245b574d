#pragma once

#include <functional>
#include <vector>

#include "pmlwave/special_functions.hpp"

namespace pmlwave {

/// Samples u(k dt), k = 0..n-1, on [0, (n-1) dt].
struct TimeSignal {
  double dt = 0.0;
  std::vector<cplx> samples;

  static TimeSignal sample(const std::function<cplx(double)>& u, double T, double dt);
  double duration() const { return dt * (samples.empty() ? 0.0 : samples.size() - 1.0); }
  bool is_real() const;
};

/// int_0^T e^{-st} u(t) dt, composite Simpson (3/8 on the last three
/// intervals when their count is odd). Throws BesselDomainError for s1 <= 0.
cplx laplace_forward(const TimeSignal& signal, ComplexFrequency s);

/// (u_k - u_{k-1}) / dt, with 0 at k = 0.
TimeSignal backward_difference(const TimeSignal& signal);

/// Cumulative trapezoid int_0^t u.
TimeSignal cumulative_trapezoid(const TimeSignal& signal);

struct ParsevalResult {
  double lhs = 0.0;   // (1/2pi) int u_L conj(v_L) ds2, tail included
  double rhs = 0.0;   // int e^{-2 s1 t} u conj(v) dt
  double tail = 0.0;  // estimated contribution of |s2| > S
  double gap = 0.0;   // |lhs - rhs| / |rhs|, or |lhs - rhs| when rhs = 0
};

/// Real parts of both sides of the Laplace-Parseval identity along Re s = s1.
/// The s2-integral is truncated at |s2| <= S and the rest estimated from
/// the decay |u_L v_L| ~ c / s2^2.
ParsevalResult parseval_check(const TimeSignal& u, const TimeSignal& v, double s1, double S = 200.0);

}  // namespace pmlwave
