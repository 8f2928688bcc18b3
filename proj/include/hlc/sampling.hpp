#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "hlc/errors.hpp"
#include "hlc/geometry.hpp"
#include "hlc/projection.hpp"
#include "hlc/rng.hpp"
#include "hlc/segment.hpp"
#include "hlc/special.hpp"

namespace hlc {

// radial environments: phi(r) = -r^2/2, constant on [0, r0], -r, or an
// arbitrary fitted piecewise linear concave generator
struct GeneratorFamily {
  enum class Kind { kGauss, kUnif, kExp, kKnots };
  Kind kind = Kind::kGauss;
  double r0 = 0.0;
  PiecewiseLinearConcave knots;

  static GeneratorFamily gauss() { return GeneratorFamily{}; }
  static GeneratorFamily unif(double r0) {
    if (!(r0 > 0.0) || !std::isfinite(r0))
      throw InputError("generator family: unif radius must be positive");
    GeneratorFamily f;
    f.kind = Kind::kUnif;
    f.r0 = r0;
    return f;
  }
  static GeneratorFamily exponential() {
    GeneratorFamily f;
    f.kind = Kind::kExp;
    return f;
  }
  static GeneratorFamily from_knots(PiecewiseLinearConcave g) {
    validate_generator(g);
    GeneratorFamily f;
    f.kind = Kind::kKnots;
    f.knots = std::move(g);
    return f;
  }
};

inline Vec sample_uniform_body(const ConvexBody& body, SplitRng& rng) {
  const int p = body.dim();
  if (auto* b = std::get_if<ConvexBody::Ball>(&body.payload())) {
    Vec dir(p);
    double nrm2;
    do {
      for (int j = 0; j < p; ++j) dir(j) = rng.normal();
      nrm2 = dir.squaredNorm();
    } while (!(nrm2 > 0.0));
    const double r =
        b->radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(p));
    return dir * (r / std::sqrt(nrm2));
  }
  if (auto* b = std::get_if<ConvexBody::Box>(&body.payload())) {
    Vec x(p);
    for (int j = 0; j < p; ++j)
      x(j) = rng.uniform(-b->halfwidths(j), b->halfwidths(j));
    return x;
  }
  if (auto* b = std::get_if<ConvexBody::LinearImage>(&body.payload())) {
    return b->matrix * sample_uniform_body(*b->base, rng);
  }
  const auto& h = std::get<ConvexBody::PointHull>(body.payload());
  Vec lo = h.vertices.colwise().minCoeff();
  Vec hi = h.vertices.colwise().maxCoeff();
  Vec x(p);
  for (long rejects = 0; rejects < 1000000;) {
    for (int j = 0; j < p; ++j) x(j) = rng.uniform(lo(j), hi(j));
    if (contains(body, x)) return x;
    ++rejects;
  }
  throw SamplerError("uniform body sampler: rejection budget exhausted");
}

// draws R with density proportional to r^{p-1} e^{phi(r)}; Knots families
// precompute cumulative segment masses once at construction
class RadialSampler {
 public:
  RadialSampler(const GeneratorFamily& fam, int p) : fam_(fam), p_(p) {
    if (p < 1) throw InputError("radial sampler: p must be >= 1");
    if (fam.kind == GeneratorFamily::Kind::kUnif && !(fam.r0 > 0.0))
      throw InputError("radial sampler: unif radius must be positive");
    if (fam_.kind != GeneratorFamily::Kind::kKnots) return;
    validate_generator(fam_.knots);
    const Vec& b = fam_.knots.breakpoints;
    const Vec& v = fam_.knots.values;
    const int m = static_cast<int>(b.size());
    mass_.assign(m, 0.0);
    if (b(0) > 0.0)
      mass_[0] = std::exp(v(0) + p_ * std::log(b(0)) -
                          std::log(static_cast<double>(p_)));
    for (int i = 1; i < m; ++i)
      mass_[i] = segment_integral(p_, b(i - 1), b(i), v(i - 1), v(i), 0);
    cum_.assign(m, 0.0);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      acc += mass_[i];
      cum_[i] = acc;
    }
    if (!(acc > 0.0) || !std::isfinite(acc))
      throw InputError("radial sampler: generator has no usable mass");
    total_ = acc;
  }

  double draw(SplitRng& rng) const {
    switch (fam_.kind) {
      case GeneratorFamily::Kind::kGauss: {
        double s = 0.0;
        for (int j = 0; j < p_; ++j) {
          const double z = rng.normal();
          s += z * z;
        }
        return std::sqrt(s);
      }
      case GeneratorFamily::Kind::kUnif:
        return fam_.r0 *
               std::pow(rng.uniform01(), 1.0 / static_cast<double>(p_));
      case GeneratorFamily::Kind::kExp:
        return rng.gamma(static_cast<double>(p_));
      case GeneratorFamily::Kind::kKnots:
        return draw_knots(rng);
    }
    throw InputError("radial sampler: unknown family");
  }

  // P(R <= r); exact closed forms, segment integrals for Knots
  double cdf(double r) const {
    if (!(r >= 0.0)) return 0.0;
    switch (fam_.kind) {
      case GeneratorFamily::Kind::kGauss:
        return chi_cdf(p_, r);
      case GeneratorFamily::Kind::kUnif:
        return r >= fam_.r0
                   ? 1.0
                   : std::pow(r / fam_.r0, static_cast<double>(p_));
      case GeneratorFamily::Kind::kExp:
        return gamma_cdf(static_cast<double>(p_), r);
      case GeneratorFamily::Kind::kKnots:
        return cdf_knots(r);
    }
    throw InputError("radial sampler: unknown family");
  }

 private:
  double plateau_partial(double r) const {
    // mass of [0, r] inside the flat piece
    const double v0 = fam_.knots.values(0);
    return std::exp(v0 + p_ * std::log(r) - std::log(static_cast<double>(p_)));
  }

  double segment_partial(int i, double r) const {
    // mass of [b_{i-1}, r] inside segment i
    const Vec& b = fam_.knots.breakpoints;
    const Vec& v = fam_.knots.values;
    if (r <= b(i - 1)) return 0.0;
    const double t = (r - b(i - 1)) / (b(i) - b(i - 1));
    const double vr = v(i - 1) + t * (v(i) - v(i - 1));
    return segment_integral(p_, b(i - 1), r, v(i - 1), vr, 0);
  }

  double cdf_knots(double r) const {
    const Vec& b = fam_.knots.breakpoints;
    const int m = static_cast<int>(b.size());
    if (r >= b(m - 1)) return 1.0;
    if (r <= b(0))
      return b(0) > 0.0 && r > 0.0 ? plateau_partial(r) / total_ : 0.0;
    const double* it = std::lower_bound(b.data(), b.data() + m, r);
    const int i = static_cast<int>(it - b.data());  // r in (b_{i-1}, b_i]
    return ((i > 0 ? cum_[i - 1] : 0.0) + segment_partial(i, r)) / total_;
  }

  double draw_knots(SplitRng& rng) const {
    const Vec& b = fam_.knots.breakpoints;
    const int m = static_cast<int>(b.size());
    const double u = rng.uniform01();
    const double target = u * total_;
    int i = static_cast<int>(
        std::lower_bound(cum_.begin(), cum_.end(), target) - cum_.begin());
    i = std::min(i, m - 1);
    const double prev = i > 0 ? cum_[i - 1] : 0.0;
    const double want = target - prev;  // mass to accumulate inside piece i
    if (i == 0)
      return b(0) * std::pow(want / mass_[0], 1.0 / static_cast<double>(p_));
    double lo = b(i - 1), hi = b(i);
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      if (segment_partial(i, mid) < want)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  GeneratorFamily fam_;
  int p_;
  std::vector<double> mass_, cum_;
  double total_ = 0.0;
};

inline double sample_radial(const GeneratorFamily& fam, int p, SplitRng& rng) {
  return RadialSampler(fam, p).draw(rng);
}

// i.i.d. rows from e^{phi(|x - mu|_K)}: uniform direction on the body scaled
// to gauge 1, radius from the radial density
inline Mat sample_density(const GeneratorFamily& fam, const ConvexBody& body,
                          const Vec& mu, int n, SplitRng& rng) {
  const int p = body.dim();
  if (mu.size() != p)
    throw InputError("sample_density: center dimension mismatch");
  if (n < 1) throw InputError("sample_density: n must be positive");
  RadialSampler radial(fam, p);
  Mat out(n, p);
  for (int i = 0; i < n; ++i) {
    Vec z;
    double g = 0.0;
    do {
      z = sample_uniform_body(body, rng);
      g = minkowski(body, z);
    } while (!(g > 0.0));
    const double r = radial.draw(rng);
    out.row(i) = (mu + z * (r / g)).transpose();
  }
  return out;
}

}  // namespace hlc
