#include "lamestab/fitting.hpp"

#include <cmath>

#include "lamestab/errors.hpp"

namespace lamestab {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw PreconditionError("fit_line: x and y differ in length");
  const int n = static_cast<int>(x.size());
  if (n < 2) throw PreconditionError("fit_line: need at least two points");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("fit_line: all x values coincide");
  LineFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw PreconditionError("fit_power_law: x and y differ in length");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw PreconditionError("fit_power_law: data must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const LineFit line = fit_line(lx, ly);
  return {line.slope, std::exp(line.intercept), line.r_squared, line.n};
}

int count_inversions(const std::vector<double>& values, bool nonincreasing, double tol) {
  int count = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double prev = values[i - 1], cur = values[i];
    const double slack = tol * std::max(std::abs(prev), std::abs(cur));
    if (nonincreasing ? cur > prev + slack : cur < prev - slack) ++count;
  }
  return count;
}

}  // namespace lamestab
