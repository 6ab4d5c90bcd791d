#pragma once

#include <vector>

namespace lamestab {

/// Ordinary least squares y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n = 0;
};
/// Needs at least two points with distinct x. R^2 is 1 when y is constant.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// y = prefactor * x^exponent, fitted in log-log coordinates.
struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double r_squared = 0.0;
  int n = 0;
};
/// Throws PreconditionError on nonpositive data.
PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// Number of adjacent pairs that break a nonincreasing (or nondecreasing)
/// order, with a relative slack `tol` on each comparison.
int count_inversions(const std::vector<double>& values, bool nonincreasing, double tol = 0.0);

}  // namespace lamestab
