#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hlc/errors.hpp"

namespace hlc {
namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// E_k(w) = int_0^1 t^k e^{wt} dt for k = 0..kmax, valid for |w| <= 0.55.
// Top index by truncated Taylor (terms decrease immediately at such w), the
// rest by the downward recurrence E_{k-1} = (e^w - w E_k)/k, a positive sum
// for w <= 0 and a mild subtraction for small positive w.
inline void unit_exp_moments(double w, int kmax, double* E) {
  if (w == 0.0) {
    for (int k = 0; k <= kmax; ++k) E[k] = 1.0 / (k + 1.0);
    return;
  }
  double sum = 1.0 / (kmax + 1.0);
  double term = sum;
  for (int m = 1; m <= 40; ++m) {
    term *= w / m * (kmax + m) / (kmax + m + 1.0);
    sum += term;
    if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
  }
  E[kmax] = sum;
  const double ew = std::exp(w);
  for (int k = kmax; k >= 1; --k) E[k - 1] = (ew - w * E[k]) / k;
}

// log of int_a^b r^q (r-c)^k e^{l(r)} dr for l linear with l(a)=la, l(b)=lb,
// integer q >= 0, k in {0,1,2}, 0 <= c <= a < b. Fills lout[0..kmax].
//
// Each subpiece keeps |delta l| <= 0.5 so the unit-interval moments are
// stable; r^q is expanded exactly through binomial weights, which form a
// binomial pmf in (Delta/b_i) -- all positive, evaluated outward from the
// mode, so no cancellation at any q.
inline void segment_log_moments(int q, double c, double a, double b,
                                double la, double lb, int kmax,
                                double* lout) {
  if (!(q >= 0) || kmax < 0 || kmax > 2 || !(c >= 0.0) || !(a >= c) ||
      !(b > a))
    throw InputError("segment_log_moments: bad arguments");
  if (la == kNegInf && lb == kNegInf) {
    for (int k = 0; k <= kmax; ++k) lout[k] = kNegInf;
    return;
  }
  if (!std::isfinite(la) || !std::isfinite(lb))
    throw InputError("segment_log_moments: non-finite endpoint values");

  const double w_tot = lb - la;
  int nsub = 1 + static_cast<int>(std::floor(std::fabs(w_tot) / 0.5));
  if (nsub > 4000000)
    throw SolverError("segment_log_moments: endpoint gap too extreme");

  double mx[3] = {kNegInf, kNegInf, kNegInf};
  double acc[3] = {0.0, 0.0, 0.0};
  std::vector<double> E(static_cast<size_t>(q) + kmax + 1);
  std::vector<double> u(static_cast<size_t>(q) + 1);

  for (int i = 0; i < nsub; ++i) {
    const double ai = a + (b - a) * (static_cast<double>(i) / nsub);
    const double bi =
        (i + 1 == nsub) ? b : a + (b - a) * (static_cast<double>(i + 1) / nsub);
    const double delta = bi - ai;
    if (!(delta > 0.0)) continue;
    const double lai = la + w_tot * (static_cast<double>(i) / nsub);
    const double w = w_tot / nsub;
    unit_exp_moments(w, q + kmax, E.data());

    // S_l = sum_j binom_pmf(q, delta/bi)(j) * E_{j+l}
    double S[3] = {0.0, 0.0, 0.0};
    if (ai == 0.0 || q == 0) {
      // single surviving binomial term j = q (theta = 1) resp. trivial q = 0
      int j = (q == 0) ? 0 : q;
      for (int l = 0; l <= kmax; ++l) S[l] = E[j + l];
    } else {
      const double theta = delta / bi;
      int mode = static_cast<int>((q + 1) * theta);
      mode = std::clamp(mode, 0, q);
      u[mode] = 1.0;
      for (int j = mode; j < q; ++j)
        u[j + 1] = u[j] * (static_cast<double>(q - j) / (j + 1)) * (delta / ai);
      for (int j = mode; j > 0; --j)
        u[j - 1] = u[j] * (static_cast<double>(j) / (q - j + 1)) * (ai / delta);
      double W = 0.0;
      for (int j = 0; j <= q; ++j) W += u[j];
      for (int l = 0; l <= kmax; ++l) {
        double s = 0.0;
        for (int j = 0; j <= q; ++j) s += u[j] * E[j + l];
        S[l] = s / W;
      }
    }

    // (r - c)^k = sum_l C(k,l) (ai - c)^{k-l} (delta t)^l, all terms >= 0
    const double off = ai - c;
    double poly[3];
    poly[0] = S[0];
    if (kmax >= 1) poly[1] = off * S[0] + delta * S[1];
    if (kmax >= 2)
      poly[2] = off * off * S[0] + 2.0 * off * delta * S[1] +
                delta * delta * S[2];

    const double base = lai + q * std::log(bi) + std::log(delta);
    for (int k = 0; k <= kmax; ++k) {
      if (!(poly[k] > 0.0)) continue;
      const double L = base + std::log(poly[k]);
      if (L <= mx[k]) {
        acc[k] += std::exp(L - mx[k]);
      } else {
        acc[k] = acc[k] * std::exp(mx[k] - L) + 1.0;
        mx[k] = L;
      }
    }
  }
  for (int k = 0; k <= kmax; ++k)
    lout[k] = (acc[k] > 0.0) ? mx[k] + std::log(acc[k]) : kNegInf;
}

inline double log_poly_exp_segment(int q, int k, double c, double a, double b,
                                   double la, double lb) {
  double out[3];
  segment_log_moments(q, c, a, b, la, lb, k, out);
  return out[k];
}

}  // namespace detail

// int_a^b r^{p-1+moment} e^{l(r)} dr with l the chord through (a, phi_a),
// (b, phi_b). moment 0 gives the mass kernel, 1 the first radial moment
// (moment 2 is accepted for curvature terms).
inline double segment_integral(int p, double a, double b, double phi_a,
                               double phi_b, int moment) {
  if (p < 1) throw InputError("segment_integral: p must be >= 1");
  if (!(a >= 0.0) || !(b > a))
    throw InputError("segment_integral: need 0 <= a < b");
  if (moment < 0 || moment > 2)
    throw InputError("segment_integral: moment must be 0, 1 or 2");
  return std::exp(detail::log_poly_exp_segment(p - 1 + moment, 0, 0.0, a, b,
                                               phi_a, phi_b));
}

}  // namespace hlc
