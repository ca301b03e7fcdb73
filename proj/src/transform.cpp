#include "esf/transform.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace esf {

double yj_apply(double lambda, double x) {
  if (x >= 0.0) {
    if (lambda == 0.0) return std::log1p(x);
    return std::expm1(lambda * std::log1p(x)) / lambda;
  }
  const double two_ml = 2.0 - lambda;
  if (two_ml == 0.0) return -std::log1p(-x);
  return -std::expm1(two_ml * std::log1p(-x)) / two_ml;
}

double yj_invert(double lambda, double y) {
  if (y >= 0.0) {
    if (lambda == 0.0) return std::expm1(y);
    const double t = lambda * y;
    if (t <= -1.0)
      throw DomainError("yj_invert: y outside the invertible image");
    return std::expm1(std::log1p(t) / lambda);
  }
  const double two_ml = 2.0 - lambda;
  if (two_ml == 0.0) return -std::expm1(-y);
  const double t = -two_ml * y;
  if (t <= -1.0)
    throw DomainError("yj_invert: y outside the invertible image");
  return -std::expm1(std::log1p(t) / two_ml);
}

double yj_profile_loglik(double lambda, std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<double> z(n);
  double jac = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = yj_apply(lambda, xs[i]);
    const double sgn = xs[i] >= 0.0 ? 1.0 : -1.0;
    jac += sgn * std::log1p(std::abs(xs[i]));
  }
  const double var = num::variance(z);
  if (!(var > 0.0)) return -std::numeric_limits<double>::infinity();
  return -0.5 * static_cast<double>(n) * std::log(var) + (lambda - 1.0) * jac;
}

TimeTransform fit_time_transform(std::span<const double> times) {
  if (times.size() < 3)
    throw DomainError("fit_time_transform: need at least 3 times");
  std::vector<double> xs(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || !std::isfinite(times[i]))
      throw DomainError("fit_time_transform: times must be positive finite");
    xs[i] = std::log(times[i]);
  }
  if (num::variance(xs) == 0.0)
    throw NumericError("fit_time_transform: constant sample");

  // Golden-section maximization of the profile log-likelihood.
  const double gr = 0.6180339887498949;
  double a = -5.0, b = 5.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = yj_profile_loglik(c, xs);
  double fd = yj_profile_loglik(d, xs);
  while (b - a > 1e-8) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = yj_profile_loglik(c, xs);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = yj_profile_loglik(d, xs);
    }
  }
  TimeTransform tt;
  tt.yj_lambda = 0.5 * (a + b);
  tt.fitted_on_n = static_cast<std::int64_t>(times.size());

  std::vector<double> z(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    z[i] = yj_apply(tt.yj_lambda, xs[i]);
  const double var = num::variance(z);
  if (!(var > 0.0))
    throw NumericError("fit_time_transform: transformed sample degenerate");
  tt.y_std = std::sqrt(var);
  return tt;
}

double forward(const TimeTransform& tt, double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw DomainError("forward: t must be positive finite");
  return yj_apply(tt.yj_lambda, std::log(t));
}

double inverse(const TimeTransform& tt, double y) {
  if (!std::isfinite(y)) throw DomainError("inverse: y must be finite");
  return std::exp(yj_invert(tt.yj_lambda, y));
}

}  // namespace esf
