#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <variant>

#include "hlc/errors.hpp"
#include "hlc/rng.hpp"
#include "hlc/simplex.hpp"
#include "hlc/special.hpp"

namespace hlc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct VolumeEstimate {
  double value = 0.0;
  double log_value = 0.0;
  double std_error = 0.0;  // 0 for closed-form volumes
  bool is_mc = false;
};

// Convex body K with 0 in its interior; the Minkowski gauge
// |x|_K = inf{t >= 0 : x in tK} is the workhorse everything else uses.
class ConvexBody {
 public:
  struct Ball {
    double radius;
  };
  struct Box {
    Vec halfwidths;
  };
  struct LinearImage {
    Mat matrix;
    Mat inverse;
    double log_abs_det;
    std::shared_ptr<const ConvexBody> base;
  };
  struct PointHull {
    Mat vertices;  // M x p, one vertex per row
    double max_vertex_norm;
  };
  using Payload = std::variant<Ball, Box, LinearImage, PointHull>;

  static ConvexBody ball(int p, double radius) {
    if (p < 1) throw InputError("ball: dimension must be >= 1");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw InputError("ball: radius must be positive and finite");
    return ConvexBody(p, Ball{radius});
  }

  static ConvexBody box(const Vec& halfwidths) {
    if (halfwidths.size() < 1) throw InputError("box: empty halfwidths");
    for (int j = 0; j < halfwidths.size(); ++j)
      if (!(halfwidths(j) > 0.0) || !std::isfinite(halfwidths(j)))
        throw InputError("box: halfwidths must be positive and finite");
    return ConvexBody(static_cast<int>(halfwidths.size()), Box{halfwidths});
  }

  static ConvexBody linear_image(const Mat& A, ConvexBody base) {
    const int p = base.dim();
    if (A.rows() != p || A.cols() != p)
      throw InputError("linear_image: matrix must be p x p for the base body");
    if (!A.allFinite()) throw InputError("linear_image: non-finite matrix");
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible())
      throw InputError("linear_image: matrix is singular");
    LinearImage li;
    li.matrix = A;
    li.inverse = lu.inverse();
    li.log_abs_det = 0.0;
    for (int j = 0; j < p; ++j)
      li.log_abs_det += std::log(std::abs(lu.matrixLU()(j, j)));
    li.base = std::make_shared<const ConvexBody>(std::move(base));
    return ConvexBody(p, std::move(li));
  }

  static ConvexBody point_hull(const Mat& vertices) {
    const int M = static_cast<int>(vertices.rows());
    const int p = static_cast<int>(vertices.cols());
    if (M < 1 || p < 1) throw InputError("point_hull: empty vertex set");
    if (!vertices.allFinite())
      throw InputError("point_hull: non-finite vertex");
    PointHull h;
    h.vertices = vertices;
    h.max_vertex_norm = vertices.rowwise().norm().maxCoeff();
    if (!(h.max_vertex_norm > 0.0))
      throw InputError("point_hull: all vertices at the origin");
    // 0 must be interior: every +-eps*e_j must lie in cone(vertices), which
    // for a finite vertex set is exactly the interior condition
    const double eps = 1e-6 * h.max_vertex_norm;
    Vec probe = Vec::Zero(p);
    for (int j = 0; j < p; ++j) {
      for (double sgn : {1.0, -1.0}) {
        probe.setZero();
        probe(j) = sgn * eps;
        if (!std::isfinite(hull_gauge(h.vertices, probe)))
          throw InputError(
              "point_hull: origin is not in the interior of the hull");
      }
    }
    return ConvexBody(p, std::move(h));
  }

  int dim() const { return p_; }
  const Payload& payload() const { return v_; }

  // gauge of conv(vertices), +inf when x is outside the convex cone
  static double hull_gauge(const Mat& vertices, const Vec& x) {
    const int M = static_cast<int>(vertices.rows());
    const int p = static_cast<int>(vertices.cols());
    if (x.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    // max u_{M+1}  s.t.  sum_m u_m Y_m = u_{M+1} x,  sum_m u_m <= 1,  u >= 0
    Mat A = Mat::Zero(p + 1, M + 2);
    A.block(0, 0, p, M) = vertices.transpose();
    A.row(p).head(M).setOnes();
    A.col(M).head(p) = -x;
    A(p, M + 1) = 1.0;
    Vec b = Vec::Zero(p + 1);
    b(p) = 1.0;
    Vec c = Vec::Zero(M + 2);
    c(M) = 1.0;
    LpResult lp = simplex_maximize(A, b, c, 1e-9);
    if (lp.status == LpResult::Status::kUnbounded) {
      // only possible in exact arithmetic when x = 0; treat numerically
      // indistinguishable inputs the same way
      if (x.cwiseAbs().maxCoeff() < 1e-13 * vertices.cwiseAbs().maxCoeff())
        return 0.0;
      throw SolverError("hull gauge: unbounded program for nonzero point");
    }
    if (lp.status != LpResult::Status::kOptimal)
      throw SolverError("hull gauge: membership program infeasible");
    const double t = lp.x(M);
    if (t <= 1e-9) return std::numeric_limits<double>::infinity();
    return 1.0 / t;
  }

 private:
  ConvexBody(int p, Payload v) : p_(p), v_(std::move(v)) {}
  int p_;
  Payload v_;
};

inline double minkowski(const ConvexBody& K, const Vec& x) {
  if (x.size() != K.dim())
    throw InputError("minkowski: point dimension mismatch");
  if (!x.allFinite()) throw InputError("minkowski: non-finite point");
  if (const auto* b = std::get_if<ConvexBody::Ball>(&K.payload()))
    return x.norm() / b->radius;
  if (const auto* b = std::get_if<ConvexBody::Box>(&K.payload()))
    return (x.cwiseQuotient(b->halfwidths)).cwiseAbs().maxCoeff();
  if (const auto* b = std::get_if<ConvexBody::LinearImage>(&K.payload()))
    return minkowski(*b->base, b->inverse * x);
  const auto& h = std::get<ConvexBody::PointHull>(K.payload());
  return ConvexBody::hull_gauge(h.vertices, x);
}

inline bool contains(const ConvexBody& K, const Vec& x, double tol = 1e-9) {
  return minkowski(K, x) <= 1.0 + tol;
}

inline VolumeEstimate volume(const ConvexBody& K,
                             std::int64_t mc_budget = 100000,
                             std::uint64_t seed = 0) {
  VolumeEstimate ve;
  if (const auto* b = std::get_if<ConvexBody::Ball>(&K.payload())) {
    ve.log_value = log_unit_ball_volume(K.dim()) +
                   K.dim() * std::log(b->radius);
    ve.value = std::exp(ve.log_value);
    return ve;
  }
  if (const auto* b = std::get_if<ConvexBody::Box>(&K.payload())) {
    ve.log_value = 0.0;
    for (int j = 0; j < b->halfwidths.size(); ++j)
      ve.log_value += std::log(2.0 * b->halfwidths(j));
    ve.value = std::exp(ve.log_value);
    return ve;
  }
  if (const auto* b = std::get_if<ConvexBody::LinearImage>(&K.payload())) {
    VolumeEstimate base = volume(*b->base, mc_budget, seed);
    ve = base;
    ve.log_value += b->log_abs_det;
    const double scale = std::exp(b->log_abs_det);
    ve.value *= scale;
    ve.std_error *= scale;
    return ve;
  }
  // point hull: hit-or-miss from the vertex bounding box
  const auto& h = std::get<ConvexBody::PointHull>(K.payload());
  if (mc_budget < 1)
    throw ConfigError("volume: positive mc_budget required for point hulls");
  const int p = K.dim();
  Vec lo = h.vertices.colwise().minCoeff();
  Vec hi = h.vertices.colwise().maxCoeff();
  double log_box = 0.0;
  for (int j = 0; j < p; ++j) {
    if (!(hi(j) > lo(j)))
      throw SolverError("volume: degenerate hull bounding box");
    log_box += std::log(hi(j) - lo(j));
  }
  SplitRng rng = SplitRng(seed).substream({0x766f6cULL});
  std::int64_t hits = 0;
  Vec y(p);
  for (std::int64_t i = 0; i < mc_budget; ++i) {
    for (int j = 0; j < p; ++j) y(j) = rng.uniform(lo(j), hi(j));
    if (contains(K, y)) ++hits;
  }
  if (hits == 0)
    throw SolverError("volume: no bounding-box samples landed in the hull");
  const double phat = static_cast<double>(hits) / mc_budget;
  const double box_vol = std::exp(log_box);
  ve.value = phat * box_vol;
  ve.log_value = std::log(phat) + log_box;
  ve.std_error =
      box_vol * std::sqrt(phat * (1.0 - phat) / mc_budget);
  ve.is_mc = true;
  return ve;
}

// (r1, r2) with B(0, r1) subset K subset B(0, r2); for hulls r1 comes from a
// probe-direction minimum, so it overshoots the true inradius by at most the
// probe-grid slack
inline std::pair<double, double> bounding_radii(const ConvexBody& K) {
  if (const auto* b = std::get_if<ConvexBody::Ball>(&K.payload()))
    return {b->radius, b->radius};
  if (const auto* b = std::get_if<ConvexBody::Box>(&K.payload()))
    return {b->halfwidths.minCoeff(), b->halfwidths.norm()};
  if (const auto* b = std::get_if<ConvexBody::LinearImage>(&K.payload())) {
    auto [r1, r2] = bounding_radii(*b->base);
    Eigen::JacobiSVD<Mat> svd(b->matrix);
    return {svd.singularValues().minCoeff() * r1,
            svd.singularValues().maxCoeff() * r2};
  }
  const auto& h = std::get<ConvexBody::PointHull>(K.payload());
  const int p = K.dim();
  SplitRng rng = SplitRng(0xb0d11e5ULL);
  double r1 = std::numeric_limits<double>::infinity();
  Vec theta(p);
  auto probe = [&](const Vec& dir) {
    double g = ConvexBody::hull_gauge(h.vertices, dir);
    if (g > 0.0) r1 = std::min(r1, dir.norm() / g);
  };
  for (int j = 0; j < p; ++j) {
    theta.setZero();
    theta(j) = 1.0;
    probe(theta);
    theta(j) = -1.0;
    probe(theta);
  }
  const int n_extra = std::max(256, 32 * p);
  for (int i = 0; i < n_extra; ++i) {
    for (int j = 0; j < p; ++j) theta(j) = rng.normal();
    if (theta.norm() < 1e-12) continue;
    probe(theta);
  }
  return {r1, h.max_vertex_norm};
}

struct DScaleAlpha {
  double value = 0.0;
  double alpha_star = 1.0;
  double sup_ratio = 1.0;
  double inf_ratio = 1.0;
};

namespace detail {

inline std::pair<double, double> gauge_ratio_range(const ConvexBody& K1,
                                                   const ConvexBody& K2,
                                                   int n_dirs,
                                                   std::uint64_t seed) {
  if (K1.dim() != K2.dim())
    throw InputError("d_scale: bodies have different dimensions");
  if (n_dirs < 1) throw ConfigError("d_scale: n_dirs must be >= 1");
  const int p = K1.dim();
  SplitRng rng = SplitRng(seed).substream({0xd5ca1eULL});
  double sup_r = -std::numeric_limits<double>::infinity();
  double inf_r = std::numeric_limits<double>::infinity();
  Vec theta(p);
  for (int i = 0; i < n_dirs; ++i) {
    double nrm = 0.0;
    do {
      for (int j = 0; j < p; ++j) theta(j) = rng.normal();
      nrm = theta.norm();
    } while (nrm < 1e-12);
    theta /= nrm;
    const double g1 = minkowski(K1, theta);
    const double g2 = minkowski(K2, theta);
    if (!(g1 > 0.0) || !(g2 > 0.0) || !std::isfinite(g1) ||
        !std::isfinite(g2))
      throw SolverError("d_scale: degenerate gauge along a direction");
    const double rho = g2 / g1;
    sup_r = std::max(sup_r, rho);
    inf_r = std::min(inf_r, rho);
  }
  return {sup_r, inf_r};
}

}  // namespace detail

// scale distance estimated over sampled directions (lower-biased: the true
// suprema can only exceed the sampled ones)
inline double d_scale(const ConvexBody& K1, const ConvexBody& K2, int n_dirs,
                      std::uint64_t seed) {
  auto [sup_r, inf_r] = detail::gauge_ratio_range(K1, K2, n_dirs, seed);
  return std::max(sup_r, 1.0 / inf_r) - 1.0;
}

// min over alpha > 0 of d_scale(alpha K1, K2), in closed form from the
// sampled ratio range
inline DScaleAlpha d_scale_inf_alpha(const ConvexBody& K1,
                                     const ConvexBody& K2, int n_dirs,
                                     std::uint64_t seed) {
  auto [sup_r, inf_r] = detail::gauge_ratio_range(K1, K2, n_dirs, seed);
  DScaleAlpha out;
  out.sup_ratio = sup_r;
  out.inf_ratio = inf_r;
  out.value = std::sqrt(sup_r / inf_r) - 1.0;
  out.alpha_star = 1.0 / std::sqrt(sup_r * inf_r);
  return out;
}

}  // namespace hlc
