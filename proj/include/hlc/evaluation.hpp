#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hlc/errors.hpp"
#include "hlc/geometry.hpp"
#include "hlc/projection.hpp"
#include "hlc/rng.hpp"
#include "hlc/sampling.hpp"
#include "hlc/special.hpp"

namespace hlc {

struct Model {
  ConvexBody body = ConvexBody::ball(1, 1.0);
  Vec mu;
  PiecewiseLinearConcave generator;
  int p = 1;
  double log_volume = 0.0;
  bool volume_is_mc = false;
  double volume_std_error = 0.0;  // std error of exp(log_volume) when MC
};

namespace detail {

inline double generator_mass(int p, double log_volume,
                             const PiecewiseLinearConcave& g) {
  ObjectiveContext ctx{p, log_volume};
  return total_mass(ctx, g.breakpoints, g.values);
}

}  // namespace detail

// normalization tolerance: exact volumes get 1e-6, MC volumes get 3 relative
// standard errors on top
inline void validate_model(const Model& m) {
  if (m.p < 1) throw InputError("model: p must be >= 1");
  if (m.body.dim() != m.p) throw InputError("model: body dimension mismatch");
  if (m.mu.size() != m.p) throw InputError("model: center dimension mismatch");
  if (!m.mu.allFinite()) throw InputError("model: non-finite center");
  if (!std::isfinite(m.log_volume))
    throw InputError("model: log_volume must be finite");
  validate_generator(m.generator);
  const double mass = detail::generator_mass(m.p, m.log_volume, m.generator);
  double tol = 1e-6;
  if (m.volume_is_mc) {
    const double rel = m.volume_std_error / std::exp(m.log_volume);
    tol += 3.0 * rel;
  }
  if (!(std::fabs(mass - 1.0) <= tol))
    throw InputError("model: generator mass " + std::to_string(mass) +
                     " violates normalization (tol " + std::to_string(tol) +
                     ")");
}

inline double log_density(const Model& m, const Vec& x) {
  if (x.size() != m.p) throw InputError("log_density: dimension mismatch");
  return eval_log_generator(m.generator, minkowski(m.body, x - m.mu));
}

// reference density: radial environment + body + center, with the cached
// body volume the normalizing constants need
struct TruthSpec {
  GeneratorFamily family;
  ConvexBody body = ConvexBody::ball(1, 1.0);
  Vec mu;
  double log_volume = 0.0;
  bool volume_is_mc = false;
  double volume_std_error = 0.0;
};

inline TruthSpec make_truth(GeneratorFamily family, ConvexBody body, Vec mu,
                            int mc_budget = 100000, std::uint64_t seed = 0) {
  if (mu.size() != body.dim())
    throw InputError("truth: center dimension mismatch");
  TruthSpec t;
  VolumeEstimate vol = volume(body, mc_budget, seed);
  t.log_volume = vol.log_value;
  t.volume_is_mc = vol.is_mc;
  t.volume_std_error = vol.std_error;
  t.family = std::move(family);
  t.body = std::move(body);
  t.mu = std::move(mu);
  if (t.family.kind == GeneratorFamily::Kind::kKnots) {
    const double mass = detail::generator_mass(t.body.dim(), t.log_volume,
                                               t.family.knots);
    double tol = 1e-6;
    if (t.volume_is_mc)
      tol += 3.0 * t.volume_std_error / std::exp(t.log_volume);
    if (!(std::fabs(mass - 1.0) <= tol))
      throw InputError("truth: knots generator mass " + std::to_string(mass) +
                       " violates normalization for this body (tol " +
                       std::to_string(tol) + ")");
  }
  return t;
}

// log of the normalized radial profile: phi0(r) + c so that
// p vol int r^{p-1} e^{phi0+c} dr = 1
inline double truth_log_radial(const TruthSpec& t, double r) {
  const int p = t.body.dim();
  const double lp = std::log(static_cast<double>(p));
  switch (t.family.kind) {
    case GeneratorFamily::Kind::kGauss:
      return -0.5 * r * r -
             (lp + t.log_volume + (0.5 * p - 1.0) * std::log(2.0) +
              std::lgamma(0.5 * p));
    case GeneratorFamily::Kind::kExp:
      return -r - (t.log_volume + std::lgamma(p + 1.0));
    case GeneratorFamily::Kind::kUnif: {
      const double c = -(t.log_volume + p * std::log(t.family.r0));
      // tolerate gauge round-off at the support boundary
      if (r <= t.family.r0 * (1.0 + 1e-12)) return c;
      return detail::kNegInf;
    }
    case GeneratorFamily::Kind::kKnots: {
      const Vec& b = t.family.knots.breakpoints;
      const double end = b(b.size() - 1);
      if (r > end && r <= end * (1.0 + 1e-12))
        return t.family.knots.values(b.size() - 1);
      return eval_log_generator(t.family.knots, r);
    }
  }
  throw InputError("truth: unknown family");
}

inline double truth_log_density(const TruthSpec& t, const Vec& x) {
  if (x.size() != t.body.dim())
    throw InputError("truth_log_density: dimension mismatch");
  return truth_log_radial(t, minkowski(t.body, x - t.mu));
}

struct Dx2 {
  double value = 0.0;
  int n_outside = 0;  // data points outside the model support
};

// empirical log-likelihood gap (1/n) sum log(fhat/f0) on the given rows
inline Dx2 dx2(const Model& m, const TruthSpec& truth, const Mat& data) {
  if (data.rows() < 1) throw InputError("dx2: empty data");
  if (data.cols() != m.p) throw InputError("dx2: data dimension mismatch");
  const int n = static_cast<int>(data.rows());
  Dx2 out;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec x = data.row(i).transpose();
    const double lf = log_density(m, x);
    const double l0 = truth_log_density(truth, x);
    if (!std::isfinite(l0))
      throw InputError("dx2: data point " + std::to_string(i) +
                       " outside the truth support");
    if (!std::isfinite(lf)) {
      ++out.n_outside;
      continue;
    }
    sum += lf - l0;
  }
  out.value = out.n_outside > 0 ? -std::numeric_limits<double>::infinity()
                                : sum / n;
  return out;
}

struct HellingerMc {
  double estimate = 0.0;
  double std_error = 0.0;
};

// squared Hellinger distance 2 - 2 int sqrt(fhat f0) by importance sampling
// from the truth; draws outside the model support contribute 0
inline HellingerMc hellinger_sq_mc(const Model& m, const TruthSpec& truth,
                                   int n_mc, SplitRng& rng) {
  if (n_mc < 2) throw InputError("hellinger_sq_mc: need n_mc >= 2");
  if (truth.body.dim() != m.p)
    throw InputError("hellinger_sq_mc: dimension mismatch");
  double sum = 0.0, sumsq = 0.0;
  Mat y = sample_density(truth.family, truth.body, truth.mu, n_mc, rng);
  for (int j = 0; j < n_mc; ++j) {
    Vec x = y.row(j).transpose();
    const double lf = log_density(m, x);
    const double l0 = truth_log_density(truth, x);
    const double term =
        std::isfinite(lf) ? std::exp(0.5 * (lf - l0)) : 0.0;
    sum += term;
    sumsq += term * term;
  }
  const double mean = sum / n_mc;
  const double var = std::max(0.0, sumsq / n_mc - mean * mean) /
                     (n_mc - 1.0);
  HellingerMc out;
  out.estimate = std::clamp(2.0 - 2.0 * mean, 0.0, 2.0);
  out.std_error = 2.0 * std::sqrt(var);
  return out;
}

namespace detail {

// log of  int r^{p-1} e^{f} dr  over a grid with f affine inside every cell
inline double log_radial_integral(int p, const std::vector<double>& grid,
                                  const std::vector<double>& f) {
  std::vector<double> logs;
  logs.reserve(grid.size());
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i + 1] > grid[i])) continue;
    logs.push_back(log_poly_exp_segment(p - 1, 0, 0.0, grid[i], grid[i + 1],
                                        f[i], f[i + 1]));
  }
  double mx = kNegInf;
  for (double l : logs) mx = std::max(mx, l);
  if (!std::isfinite(mx)) return kNegInf;
  double s = 0.0;
  for (double l : logs) s += std::exp(l - mx);
  return mx + std::log(s);
}

}  // namespace detail

// exact squared Hellinger distance between two radial models on the same
// body: IA + IB - 2 IC with IC the half-sum exponent, all on the breakpoint
// union so shared segments cancel exactly
inline double hellinger_sq_1d(const PiecewiseLinearConcave& genA,
                              const PiecewiseLinearConcave& genB, int p,
                              double log_volume) {
  if (p < 1) throw InputError("hellinger_sq_1d: p must be >= 1");
  if (!std::isfinite(log_volume))
    throw InputError("hellinger_sq_1d: log_volume must be finite");
  validate_generator(genA);
  validate_generator(genB);
  const double endA = genA.breakpoints(genA.breakpoints.size() - 1);
  const double endB = genB.breakpoints(genB.breakpoints.size() - 1);
  const double end = std::min(endA, endB);

  // every grid carries both breakpoint sets so that shared segments produce
  // bitwise-identical cells (A = B gives exactly 0, swap symmetry is exact)
  auto build_grid = [&](double upto) {
    std::vector<double> g;
    g.push_back(0.0);
    for (int i = 0; i < genA.breakpoints.size(); ++i)
      if (genA.breakpoints(i) <= upto) g.push_back(genA.breakpoints(i));
    for (int i = 0; i < genB.breakpoints.size(); ++i)
      if (genB.breakpoints(i) <= upto) g.push_back(genB.breakpoints(i));
    g.push_back(upto);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  };
  auto values_on = [&](const PiecewiseLinearConcave& gen,
                       const std::vector<double>& grid) {
    std::vector<double> v(grid.size());
    for (size_t i = 0; i < grid.size(); ++i)
      v[i] = eval_log_generator(gen, grid[i]);
    return v;
  };

  const double lscale = std::log(static_cast<double>(p)) + log_volume;

  std::vector<double> gridU = build_grid(end);
  std::vector<double> laU = values_on(genA, gridU);
  std::vector<double> lbU = values_on(genB, gridU);
  std::vector<double> half(gridU.size());
  for (size_t i = 0; i < gridU.size(); ++i)
    half[i] = 0.5 * (laU[i] + lbU[i]);
  const double logIC = detail::log_radial_integral(p, gridU, half);

  std::vector<double> gridA = build_grid(endA);
  const double logIA =
      detail::log_radial_integral(p, gridA, values_on(genA, gridA));

  std::vector<double> gridB = build_grid(endB);
  const double logIB =
      detail::log_radial_integral(p, gridB, values_on(genB, gridB));

  const double val = std::exp(lscale + logIA) + std::exp(lscale + logIB) -
                     2.0 * std::exp(lscale + logIC);
  return std::max(val, 0.0);
}

inline double hellinger_sq_1d(const Model& a, const Model& b) {
  if (a.p != b.p || std::fabs(a.log_volume - b.log_volume) > 1e-12)
    throw InputError("hellinger_sq_1d: models do not share (p, log_volume)");
  return hellinger_sq_1d(a.generator, b.generator, a.p, a.log_volume);
}

// scale-alignment body recovery error: min over alpha of the scale distance
// between alpha * est and truth, from sampled gauge ratios
inline double body_error(const ConvexBody& est, const ConvexBody& truth,
                         int n_dirs, std::uint64_t seed) {
  return d_scale_inf_alpha(est, truth, n_dirs, seed).value;
}

}  // namespace hlc
