#pragma once

#include <vector>

namespace pmlwave {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Least squares y = slope * x + intercept. Needs >= 2 points with distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// fit_line(x, log y); entries with non-finite or non-positive y are skipped.
LinearFit fit_log_linear(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pmlwave
