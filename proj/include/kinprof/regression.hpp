#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "kinprof/errors.hpp"

namespace kinprof {

/// Ordinary least squares y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
  double mean_x = 0.0;
  double sxx = 0.0;        // sum (x - mean_x)^2
  double residual_sd = 0;  // sqrt(SSE / (n - 2)), 0 when n <= 2
  double r_squared = 0.0;

  double predict(double x) const { return slope * x + intercept; }
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw UndefinedMetric("line fit needs at least two paired points");
  LineFit f;
  f.n = n;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f.mean_x += x[i];
    my += y[i];
  }
  f.mean_x /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - f.mean_x;
    const double dy = y[i] - my;
    f.sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(f.sxx > 0.0)) throw UndefinedMetric("line fit needs at least two distinct x values");
  f.slope = sxy / f.sxx;
  f.intercept = my - f.slope * f.mean_x;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.predict(x[i]);
    sse += r * r;
  }
  if (n > 2) f.residual_sd = std::sqrt(sse / static_cast<double>(n - 2));
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

/// Two-sided Student-t critical value for the given coverage level.
inline double student_t_critical(double level, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 0.5 + 0.5 * level);
}

/// Half-width of the prediction interval for a new observation at x.
inline double prediction_half_width(const LineFit& f, double x, double level) {
  if (f.n < 3) throw UndefinedMetric("prediction interval needs at least three points");
  const double dx = x - f.mean_x;
  const double t = student_t_critical(level, static_cast<double>(f.n - 2));
  return t * f.residual_sd * std::sqrt(1.0 + 1.0 / static_cast<double>(f.n) + dx * dx / f.sxx);
}

}  // namespace kinprof
