#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hlc/errors.hpp"
#include "hlc/segment.hpp"

namespace hlc {

using Vec = Eigen::VectorXd;

// distinct radii with multiplicity weights; the projection problem only sees
// data through this
struct RadialSample {
  Vec radii;    // strictly ascending, >= 0
  Vec weights;  // positive, sum 1

  int n() const { return static_cast<int>(radii.size()); }

  static RadialSample from_raw(const Vec& raw) {
    const int m = static_cast<int>(raw.size());
    if (m < 1) throw InputError("radial sample: empty");
    std::vector<double> z(raw.data(), raw.data() + m);
    for (double v : z) {
      if (!std::isfinite(v)) throw InputError("radial sample: non-finite radius");
      if (v < 0.0) throw InputError("radial sample: negative radius");
    }
    std::sort(z.begin(), z.end());
    if (!(z.back() > 0.0))
      throw InputError("radial sample: all radii are zero");
    // collapse ties; anchored to the group's first element so a chain of
    // sub-tolerance gaps cannot silently merge distinct radii
    std::vector<double> rad, wt;
    size_t i = 0;
    while (i < z.size()) {
      const double first = z[i];
      const double tol = 1e-12 * std::max(1.0, first);
      double sum = 0.0;
      size_t cnt = 0;
      while (i < z.size() && z[i] - first <= tol) {
        sum += z[i];
        ++i;
        ++cnt;
      }
      rad.push_back(sum / static_cast<double>(cnt));
      wt.push_back(static_cast<double>(cnt) / m);
    }
    RadialSample s;
    s.radii = Eigen::Map<Vec>(rad.data(), static_cast<int>(rad.size()));
    s.weights = Eigen::Map<Vec>(wt.data(), static_cast<int>(wt.size()));
    return s;
  }

  static RadialSample from_weighted(const Vec& radii, const Vec& weights) {
    if (radii.size() < 1 || radii.size() != weights.size())
      throw InputError("radial sample: bad weighted input sizes");
    for (int i = 0; i < radii.size(); ++i) {
      if (!std::isfinite(radii(i)) || radii(i) < 0.0)
        throw InputError("radial sample: bad radius");
      if (!(weights(i) > 0.0) || !std::isfinite(weights(i)))
        throw InputError("radial sample: weights must be positive");
      if (i > 0 && !(radii(i) > radii(i - 1)))
        throw InputError("radial sample: radii must be strictly ascending");
    }
    if (!(radii(radii.size() - 1) > 0.0))
      throw InputError("radial sample: all radii are zero");
    const double s = weights.sum();
    if (std::fabs(s - 1.0) > 1e-8)
      throw InputError("radial sample: weights must sum to 1");
    RadialSample out;
    out.radii = radii;
    out.weights = weights / s;
    return out;
  }
};

struct ObjectiveContext {
  int p = 1;            // ambient dimension
  double log_volume = 0.0;  // log volume of the body whose gauge made the radii
};

// log generator: constant on [0, b_0], linear between breakpoints, -inf
// beyond the last one (the value at the support end is included)
struct PiecewiseLinearConcave {
  Vec breakpoints;
  Vec values;

  double operator()(double r) const;
};

inline double eval_log_generator(const PiecewiseLinearConcave& g, double r) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw InputError("eval_log_generator: radius must be finite and >= 0");
  const int m = static_cast<int>(g.breakpoints.size());
  if (m < 1) throw InputError("eval_log_generator: empty generator");
  if (r <= g.breakpoints(0)) return g.values(0);
  if (r > g.breakpoints(m - 1)) return detail::kNegInf;
  const double* begin = g.breakpoints.data();
  const double* it = std::lower_bound(begin, begin + m, r);
  int i1 = static_cast<int>(it - begin);
  int i0 = i1 - 1;
  const double t = (r - g.breakpoints(i0)) /
                   (g.breakpoints(i1) - g.breakpoints(i0));
  return g.values(i0) + t * (g.values(i1) - g.values(i0));
}

inline double PiecewiseLinearConcave::operator()(double r) const {
  return eval_log_generator(*this, r);
}

// throws InputError naming the first offending index
inline void validate_generator(const PiecewiseLinearConcave& g) {
  const int m = static_cast<int>(g.breakpoints.size());
  if (m < 1 || g.values.size() != m)
    throw InputError("generator: breakpoints/values size mismatch or empty");
  for (int i = 0; i < m; ++i) {
    if (!std::isfinite(g.breakpoints(i)) || g.breakpoints(i) < 0.0)
      throw InputError("generator: bad breakpoint at index " +
                       std::to_string(i));
    if (!std::isfinite(g.values(i)))
      throw InputError("generator: non-finite value at index " +
                       std::to_string(i));
  }
  for (int i = 1; i < m; ++i) {
    if (!(g.breakpoints(i) > g.breakpoints(i - 1)))
      throw InputError("generator: breakpoints not ascending at index " +
                       std::to_string(i));
    if (g.values(i) > g.values(i - 1) + 1e-9)
      throw InputError("generator: values increase at index " +
                       std::to_string(i));
  }
  for (int i = 2; i < m; ++i) {
    const double s_prev = (g.values(i - 1) - g.values(i - 2)) /
                          (g.breakpoints(i - 1) - g.breakpoints(i - 2));
    const double s_cur = (g.values(i) - g.values(i - 1)) /
                         (g.breakpoints(i) - g.breakpoints(i - 1));
    if (s_cur > s_prev + 1e-9 * (1.0 + std::fabs(s_prev)))
      throw InputError("generator: slope increases at index " +
                       std::to_string(i));
  }
}

// constraint c in [0, n-2]: c = 0 forbids an increase from the first point,
// c >= 1 forbids a convex kink at point c
struct ActiveSet {
  int n = 0;
  std::vector<char> active;  // size max(n-1, 0)

  static ActiveSet all_active(int n) {
    ActiveSet a;
    a.n = n;
    a.active.assign(n > 0 ? n - 1 : 0, 1);
    return a;
  }
  static ActiveSet none_active(int n) {
    ActiveSet a;
    a.n = n;
    a.active.assign(n > 0 ? n - 1 : 0, 0);
    return a;
  }
  // ascending 0-based point indices of allowed kinks; always includes n-1
  std::vector<int> knots() const {
    std::vector<int> k;
    for (int c = 0; c + 1 < n; ++c)
      if (!active[c]) k.push_back(c);
    k.push_back(n - 1);
    return k;
  }
};

namespace detail {

inline void check_context(const ObjectiveContext& ctx) {
  if (ctx.p < 1) throw InputError("objective context: p must be >= 1");
  if (!std::isfinite(ctx.log_volume))
    throw InputError("objective context: log_volume must be finite");
}

// total mass  p * vol * int_0^inf r^{p-1} e^{phi(r)} dr  for the piecewise
// linear phi given by its values at the sample radii (plateau before the
// first one). The plateau piece contributes vol * e^{phi_0} * Z_0^p: the
// closed-form mass of the flat segment, which the per-knot reduction of the
// objective also uses.
inline double total_mass(const ObjectiveContext& ctx, const Vec& Z,
                         const Vec& phi) {
  const int n = static_cast<int>(Z.size());
  const double lp = std::log(static_cast<double>(ctx.p));
  double mass = 0.0;
  if (Z(0) > 0.0)
    mass += std::exp(ctx.log_volume + phi(0) + ctx.p * std::log(Z(0)));
  for (int i = 0; i + 1 < n; ++i) {
    const double lu = log_poly_exp_segment(ctx.p - 1, 0, 0.0, Z(i), Z(i + 1),
                                           phi(i), phi(i + 1));
    mass += std::exp(lp + ctx.log_volume + lu);
  }
  return mass;
}

}  // namespace detail

// discretized projection objective; -inf when the mass term overflows
inline double objective(const ObjectiveContext& ctx, const RadialSample& s,
                        const Vec& phi) {
  detail::check_context(ctx);
  if (phi.size() != s.n())
    throw InputError("objective: phi must have one entry per distinct radius");
  for (int i = 0; i < phi.size(); ++i)
    if (std::isnan(phi(i)) || phi(i) == std::numeric_limits<double>::infinity())
      throw InputError("objective: phi entries must not be NaN or +inf");
  const double lin = s.weights.dot(phi);
  const double mass = detail::total_mass(ctx, s.radii, phi);
  return lin - mass + 1.0;
}

inline Vec gradient(const ObjectiveContext& ctx, const RadialSample& s,
                    const Vec& phi) {
  detail::check_context(ctx);
  const int n = s.n();
  if (phi.size() != n)
    throw InputError("gradient: phi must have one entry per distinct radius");
  const Vec& Z = s.radii;
  const double lp = std::log(static_cast<double>(ctx.p));
  Vec g = s.weights;
  if (Z(0) > 0.0)
    g(0) -= std::exp(ctx.log_volume + phi(0) + ctx.p * std::log(Z(0)));
  double lm[3];
  for (int i = 0; i + 1 < n; ++i) {
    const double d = Z(i + 1) - Z(i);
    detail::segment_log_moments(ctx.p - 1, Z(i), Z(i), Z(i + 1), phi(i),
                                phi(i + 1), 1, lm);
    const double m0 = std::exp(lp + ctx.log_volume + lm[0]);
    const double m1 = std::exp(lp + ctx.log_volume + lm[1]) / d;
    g(i) -= std::max(m0 - m1, 0.0);
    g(i + 1) -= m1;
  }
  return g;
}

namespace detail {

inline Vec expand_knots(const Vec& Z, const std::vector<int>& knots,
                        const Vec& x) {
  const int n = static_cast<int>(Z.size());
  const int T = static_cast<int>(knots.size());
  Vec phi(n);
  for (int j = 0; j <= knots[0]; ++j) phi(j) = x(0);
  for (int t = 0; t + 1 < T; ++t) {
    const int a = knots[t], b = knots[t + 1];
    const double za = Z(a), zb = Z(b);
    for (int j = a + 1; j < b; ++j) {
      const double w = (zb - Z(j)) / (zb - za);
      phi(j) = w * x(t) + (1.0 - w) * x(t + 1);
    }
    phi(b) = x(t + 1);
  }
  return phi;
}

// v_c' phi for all constraints
inline Vec constraint_values(const Vec& Z, const Vec& phi) {
  const int n = static_cast<int>(Z.size());
  Vec cv(std::max(n - 1, 0));
  if (n < 2) return cv;
  cv(0) = phi(1) - phi(0);
  double s_prev = (phi(1) - phi(0)) / (Z(1) - Z(0));
  for (int c = 1; c + 1 < n; ++c) {
    const double s_cur = (phi(c + 1) - phi(c)) / (Z(c + 1) - Z(c));
    cv(c) = s_cur - s_prev;
    s_prev = s_cur;
  }
  return cv;
}

// objective restricted to the subspace of a knot set, in knot coordinates
struct ReducedProblem {
  const ObjectiveContext* ctx;
  const RadialSample* s;
  std::vector<int> knots;
  Vec A;   // knot radii
  Vec cw;  // linear coefficients: weight mass carried by each knot

  ReducedProblem(const ObjectiveContext& c, const RadialSample& smp,
                 std::vector<int> k)
      : ctx(&c), s(&smp), knots(std::move(k)) {
    const int T = static_cast<int>(knots.size());
    A.resize(T);
    for (int t = 0; t < T; ++t) A(t) = s->radii(knots[t]);
    cw = Vec::Zero(T);
    const Vec& Z = s->radii;
    const Vec& w = s->weights;
    int t = 0;
    for (int j = 0; j < s->n(); ++j) {
      if (j <= knots[0]) {
        cw(0) += w(j);
        continue;
      }
      while (knots[t + 1] < j) ++t;
      const int a = knots[t], b = knots[t + 1];
      const double om = (Z(b) - Z(j)) / (Z(b) - Z(a));
      cw(t) += w(j) * om;
      cw(t + 1) += w(j) * (1.0 - om);
    }
  }

  int T() const { return static_cast<int>(knots.size()); }

  double plateau_mass(const Vec& x) const {
    if (!(A(0) > 0.0)) return 0.0;
    return std::exp(ctx->log_volume + x(0) + ctx->p * std::log(A(0)));
  }

  double value(const Vec& x) const {
    const double lp = std::log(static_cast<double>(ctx->p));
    double mass = plateau_mass(x);
    for (int t = 0; t + 1 < T(); ++t) {
      const double lu = log_poly_exp_segment(ctx->p - 1, 0, 0.0, A(t),
                                             A(t + 1), x(t), x(t + 1));
      mass += std::exp(lp + ctx->log_volume + lu);
    }
    return cw.dot(x) - mass + 1.0;
  }

  Vec grad(const Vec& x) const {
    const double lp = std::log(static_cast<double>(ctx->p));
    Vec g = cw;
    g(0) -= plateau_mass(x);
    double lm[3];
    for (int t = 0; t + 1 < T(); ++t) {
      const double d = A(t + 1) - A(t);
      segment_log_moments(ctx->p - 1, A(t), A(t), A(t + 1), x(t), x(t + 1), 1,
                          lm);
      const double m0 = std::exp(lp + ctx->log_volume + lm[0]);
      const double m1 = std::exp(lp + ctx->log_volume + lm[1]) / d;
      g(t) -= std::max(m0 - m1, 0.0);
      g(t + 1) -= m1;
    }
    return g;
  }

  // negative-definite tridiagonal Hessian: diag and superdiagonal
  void hess(const Vec& x, Vec& diag, Vec& off) const {
    const double lp = std::log(static_cast<double>(ctx->p));
    diag = Vec::Zero(T());
    off = Vec::Zero(std::max(T() - 1, 0));
    diag(0) -= plateau_mass(x);
    double lm[3];
    for (int t = 0; t + 1 < T(); ++t) {
      const double d = A(t + 1) - A(t);
      segment_log_moments(ctx->p - 1, A(t), A(t), A(t + 1), x(t), x(t + 1), 2,
                          lm);
      const double m0 = std::exp(lp + ctx->log_volume + lm[0]);
      const double m1 = std::exp(lp + ctx->log_volume + lm[1]) / d;
      const double m2 = std::exp(lp + ctx->log_volume + lm[2]) / (d * d);
      diag(t) -= std::max(m0 - 2.0 * m1 + m2, 0.0);
      diag(t + 1) -= m2;
      off(t) = -std::max(m1 - m2, 0.0);
    }
  }
};

// LDL' solve of (diag, off) * y = rhs for an SPD tridiagonal system;
// false when a pivot is not positive
inline bool solve_spd_tridiag(Vec diag, Vec off, const Vec& rhs, Vec& y) {
  const int T = static_cast<int>(diag.size());
  std::vector<double> l(std::max(T - 1, 0));
  for (int i = 0; i + 1 < T; ++i) {
    if (!(diag(i) > 0.0)) return false;
    l[i] = off(i) / diag(i);
    diag(i + 1) -= l[i] * off(i);
  }
  if (!(diag(T - 1) > 0.0)) return false;
  y = rhs;
  for (int i = 1; i < T; ++i) y(i) -= l[i - 1] * y(i - 1);
  for (int i = 0; i < T; ++i) y(i) /= diag(i);
  for (int i = T - 2; i >= 0; --i) y(i) -= l[i] * y(i + 1);
  return true;
}

// damped Newton with Armijo backtracking on the reduced problem
inline Vec newton_reduced(const ReducedProblem& R, Vec x,
                          double grad_tol = 1e-9, int max_iter = 200) {
  const int T = R.T();
  Vec g(T), d(T), diag(T), off(std::max(T - 1, 0));
  double G0 = R.value(x);
  if (!std::isfinite(G0))
    throw SolverError("restricted solve: infinite objective at start");
  for (int iter = 0; iter < max_iter; ++iter) {
    g = R.grad(x);
    if (g.cwiseAbs().maxCoeff() <= grad_tol) return x;
    R.hess(x, diag, off);
    bool ok = solve_spd_tridiag(-diag, -off, g, d);
    if (!ok || g.dot(d) <= 0.0) d = g;
    const double gd = g.dot(d);
    double alpha = 1.0;
    bool accepted = false;
    double best_G = G0;
    Vec best_x;
    for (int bt = 0; bt < 60; ++bt) {
      Vec trial = x + alpha * d;
      const double Gt = R.value(trial);
      // strict: a step whose sufficient-increase margin underflows must not
      // be accepted at equal value, or a flat-region solve never terminates
      if (std::isfinite(Gt) && Gt > G0 + 1e-4 * alpha * gd) {
        x = std::move(trial);
        G0 = Gt;
        accepted = true;
        break;
      }
      if (std::isfinite(Gt) && Gt > best_G) {
        best_G = Gt;
        best_x = trial;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (best_x.size() == T) {
        x = std::move(best_x);
        G0 = best_G;
        continue;
      }
      // no direction of numeric improvement left
      if (g.cwiseAbs().maxCoeff() <= 1e-6) return x;
      throw SolverError("restricted solve: line search stalled");
    }
  }
  throw SolverError("restricted solve: Newton iteration limit reached");
}

}  // namespace detail

// maximize over the subspace where the given constraints hold with equality;
// warm_start supplies the starting knot values
inline Vec solve_restricted(const ObjectiveContext& ctx,
                            const RadialSample& s, const ActiveSet& A,
                            const Vec& warm_start) {
  detail::check_context(ctx);
  if (A.n != s.n() ||
      static_cast<int>(A.active.size()) != std::max(s.n() - 1, 0))
    throw InputError("solve_restricted: active set size mismatch");
  if (warm_start.size() != s.n())
    throw InputError("solve_restricted: warm start size mismatch");
  detail::ReducedProblem R(ctx, s, A.knots());
  Vec x(R.T());
  for (int t = 0; t < R.T(); ++t) x(t) = warm_start(R.knots[t]);
  x = detail::newton_reduced(R, x);
  return detail::expand_knots(s.radii, R.knots, x);
}

// active-set maximization of the projection objective over the decreasing
// concave cone; exact in finitely many steps up to the pinned tolerances
inline PiecewiseLinearConcave fit_projection(const ObjectiveContext& ctx,
                                             const RadialSample& s) {
  detail::check_context(ctx);
  const int n = s.n();
  const Vec& Z = s.radii;
  ActiveSet A = ActiveSet::all_active(n);
  std::vector<int> knots = A.knots();

  // uniform start: constant phi with unit total mass, the exact optimum for
  // the all-active set
  detail::ReducedProblem R0(ctx, s, knots);
  Vec x(1);
  x(0) = -(ctx.log_volume + ctx.p * std::log(Z(n - 1)));
  x = detail::newton_reduced(R0, x);
  Vec phi = detail::expand_knots(Z, knots, x);
  double F_cur = objective(ctx, s, phi);

  const double kkt_exit = 1e-8;
  const int max_outer = 10 * n + 200;
  int last_pick = -1;
  int stall_count = 0;

  for (int outer = 0; outer < max_outer; ++outer) {
    // multipliers via suffix sums: beta_c = -sum_{j>c} (Z_j - Z_c) g_j
    Vec g = gradient(ctx, s, phi);
    double S0 = 0.0, S1 = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    int pick = -1;
    for (int c = n - 2; c >= 0; --c) {
      S0 += g(c + 1);
      S1 += Z(c + 1) * g(c + 1);
      if (!A.active[c]) continue;
      const double beta = -(S1 - Z(c) * S0);
      if (beta >= best) {  // c descends, so ties resolve to the lowest index
        best = beta;
        pick = c;
      }
    }
    if (pick < 0 || best <= kkt_exit) break;

    const double F_before = F_cur;
    A.active[pick] = 0;
    knots = A.knots();
    Vec phi_new;
    for (int inner = 0; inner <= n; ++inner) {
      detail::ReducedProblem R(ctx, s, knots);
      Vec xw(R.T());
      for (int t = 0; t < R.T(); ++t) xw(t) = phi(R.knots[t]);
      Vec xs = detail::newton_reduced(R, xw);
      phi_new = detail::expand_knots(Z, knots, xs);

      // scan inactive constraints for violations (active ones hold exactly
      // by construction)
      Vec cv_new = detail::constraint_values(Z, phi_new);
      double worst = 0.0;
      bool violated = false;
      for (int c : knots) {
        if (c > n - 2) continue;
        double scale = (c == 0)
                           ? 1.0 + std::fabs(phi_new(0)) + std::fabs(phi_new(1))
                           : 1.0 + std::fabs(cv_new(c));
        if (cv_new(c) > 1e-12 * scale) {
          violated = true;
          worst = std::max(worst, cv_new(c));
        }
      }
      if (!violated) break;

      Vec cv_old = detail::constraint_values(Z, phi);
      double t_star = 0.0;
      for (int c : knots) {
        if (c > n - 2 || cv_new(c) <= 0.0) continue;
        const double denom = cv_new(c) - cv_old(c);
        if (denom <= 0.0) continue;
        t_star = std::max(t_star, cv_new(c) / denom);
      }
      t_star = std::min(t_star, 1.0 - 1e-12);
      phi = t_star * phi + (1.0 - t_star) * phi_new;
      // blocking constraints re-enter the active set
      bool grew = false;
      for (int c : knots) {
        if (c > n - 2 || cv_new(c) <= 0.0) continue;
        const double denom = cv_new(c) - cv_old(c);
        if (denom <= 0.0) continue;
        if (cv_new(c) / denom >= t_star * (1.0 - 1e-10)) {
          A.active[c] = 1;
          grew = true;
        }
      }
      if (!grew)
        throw SolverError("fit_projection: blocked step without blocker");
      knots = A.knots();
      if (inner == n)
        throw SolverError("fit_projection: inner loop failed to terminate");
    }
    phi = phi_new;
    const double F_new = objective(ctx, s, phi);
    if (F_new < F_cur - 1e-7 * (1.0 + std::fabs(F_cur)))
      throw SolverError("fit_projection: objective decreased");
    if (pick == last_pick &&
        F_new <= F_before + 1e-14 * (1.0 + std::fabs(F_before))) {
      if (++stall_count > 2)
        throw SolverError("fit_projection: no progress on constraint " +
                          std::to_string(pick));
    } else {
      stall_count = 0;
    }
    last_pick = pick;
    F_cur = F_new;
    if (outer + 1 == max_outer)
      throw SolverError("fit_projection: outer iteration limit reached");
  }

  // assemble: plateau edge plus retained knots
  knots = A.knots();
  const bool first_is_knot = (knots[0] == 0);
  const int m = static_cast<int>(knots.size()) + (first_is_knot ? 0 : 1);
  PiecewiseLinearConcave out;
  out.breakpoints.resize(m);
  out.values.resize(m);
  int idx = 0;
  if (!first_is_knot) {
    out.breakpoints(0) = Z(0);
    out.values(0) = phi(0);
    idx = 1;
  }
  for (int k : knots) {
    out.breakpoints(idx) = Z(k);
    out.values(idx) = phi(k);
    ++idx;
  }
  // exact renormalization: the objective is concave along constant shifts
  // with its maximum at unit mass, so this never hurts and pins the
  // normalization invariant to rounding error
  out.values.array() -=
      std::log(detail::total_mass(ctx, out.breakpoints, out.values));
  return out;
}

}  // namespace hlc
