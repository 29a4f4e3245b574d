#include "pmlwave/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace pmlwave {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: x and y differ in length");
  if (x.size() < 2) throw std::invalid_argument("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: all x values are equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A flat series is fitted perfectly by the zero slope.
  fit.r2 = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  fit.points = static_cast<int>(x.size());
  return fit;
}

LinearFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (std::isfinite(y[i]) && y[i] > 0.0 && std::isfinite(x[i])) {
      xs.push_back(x[i]);
      ly.push_back(std::log(y[i]));
    }
  }
  return fit_line(xs, ly);
}

}  // namespace pmlwave
