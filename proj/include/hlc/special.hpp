#pragma once

#include <cmath>
#include <limits>

#include "hlc/errors.hpp"

namespace hlc {

// log volume of the unit Euclidean ball in dimension p
inline double log_unit_ball_volume(int p) {
  if (p < 1) throw ConfigError("dimension must be >= 1");
  return 0.5 * p * std::log(M_PI) - std::lgamma(0.5 * p + 1.0);
}

// Regularized lower incomplete gamma P(a, x) = gamma(a,x)/Gamma(a).
// Series for x < a+1, Lentz continued fraction otherwise.
inline double gammainc_lower(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ConfigError("gammainc_lower: bad arguments");
  if (x == 0.0) return 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  const double logpre = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * eps)
        return sum * std::exp(logpre);
    }
    throw SolverError("gammainc_lower: series did not converge");
  }
  // modified Lentz for the continued fraction of Q(a, x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < eps) {
      double q = std::exp(logpre) * h;
      return 1.0 - q;
    }
  }
  throw SolverError("gammainc_lower: continued fraction did not converge");
}

// CDF of the chi distribution with p degrees of freedom
inline double chi_cdf(int p, double r) {
  if (r <= 0.0) return 0.0;
  return gammainc_lower(0.5 * p, 0.5 * r * r);
}

// CDF of Gamma(shape, rate 1)
inline double gamma_cdf(double shape, double r) {
  if (r <= 0.0) return 0.0;
  return gammainc_lower(shape, r);
}

}  // namespace hlc
