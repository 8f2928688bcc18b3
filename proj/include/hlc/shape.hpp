#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <utility>
#include <vector>

#include "hlc/errors.hpp"
#include "hlc/geometry.hpp"

namespace hlc {

struct ScatterEstimate {
  Vec mean;      // sample mean (or the supplied center)
  Mat sqrt_cov;  // symmetric PSD square root of the covariance
};

namespace detail {

// symmetric eigendecomposition with eigenvalue floor; returns (V, lambda)
inline std::pair<Mat, Vec> floored_eig(const Mat& cov) {
  Mat sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.info() != Eigen::Success)
    throw SolverError("scatter: eigendecomposition failed");
  Vec lam = eig.eigenvalues();
  const double lmax = lam.maxCoeff();
  if (!(lmax > 0.0))
    throw SolverError("scatter: covariance is singular in all directions");
  const double floor = 1e-10 * lmax;
  for (int i = 0; i < lam.size(); ++i) lam(i) = std::max(lam(i), floor);
  return {eig.eigenvectors(), lam};
}

inline ScatterEstimate scatter_about(const Mat& data, const Vec& center) {
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (n <= p)
    throw InputError("scatter: need more rows than columns (n > p)");
  Mat centered = data.rowwise() - center.transpose();
  Mat cov = (centered.transpose() * centered) / static_cast<double>(n);
  auto [V, lam] = floored_eig(cov);
  ScatterEstimate est;
  est.mean = center;
  est.sqrt_cov = V * lam.cwiseSqrt().asDiagonal() * V.transpose();
  return est;
}

}  // namespace detail

inline std::pair<ScatterEstimate, ConvexBody> estimate_scatter(
    const Mat& data, const ConvexBody& K0) {
  if (data.cols() != K0.dim())
    throw InputError("scatter: data dimension does not match the body");
  Vec mu = data.colwise().mean();
  ScatterEstimate est = detail::scatter_about(data, mu);
  return {est, ConvexBody::linear_image(est.sqrt_cov, K0)};
}

inline std::pair<Mat, ScatterEstimate> whiten(const Mat& data) {
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (n <= p)
    throw InputError("whiten: need more rows than columns (n > p)");
  Vec mu = data.colwise().mean();
  Mat centered = data.rowwise() - mu.transpose();
  Mat cov = (centered.transpose() * centered) / static_cast<double>(n);
  auto [V, lam] = detail::floored_eig(cov);
  ScatterEstimate est;
  est.mean = mu;
  est.sqrt_cov = V * lam.cwiseSqrt().asDiagonal() * V.transpose();
  Mat inv_sqrt =
      V * lam.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  return {centered * inv_sqrt.transpose(), est};
}

// boundary-point hull estimate: each direction keeps the points whose
// projection onto it is within that point's k best directions, and places a
// vertex at their mean Euclidean norm
inline ConvexBody estimate_hull(const Mat& data, const Mat& directions_data,
                                int k) {
  const int n = static_cast<int>(data.rows());
  const int M = static_cast<int>(directions_data.rows());
  const int p = static_cast<int>(data.cols());
  if (n < 1) throw InputError("hull: need at least one data row");
  if (M < 1) throw InputError("hull: need at least one direction row");
  if (directions_data.cols() != p)
    throw InputError("hull: direction dimension mismatch");
  if (k < 1) throw InputError("hull: k must be positive");
  if (k > M) throw InputError("hull: k exceeds the number of directions");

  Mat theta(M, p);
  for (int m = 0; m < M; ++m) {
    const double nrm = directions_data.row(m).norm();
    if (!(nrm > 0.0)) throw InputError("hull: zero direction row");
    theta.row(m) = directions_data.row(m) / nrm;
  }

  Mat proj = data * theta.transpose();  // n x M

  // per point: threshold = k-th largest projection across directions
  Vec tau(n);
  std::vector<double> row(M);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < M; ++m) row[m] = proj(i, m);
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end(),
                     std::greater<double>());
    tau(i) = row[k - 1];
  }

  Vec norms = data.rowwise().norm();
  std::vector<Vec> verts;
  verts.reserve(M);
  int skipped = 0;
  for (int m = 0; m < M; ++m) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i) {
      if (proj(i, m) >= tau(i)) {
        sum += norms(i);
        ++cnt;
      }
    }
    if (cnt == 0) {
      ++skipped;
      continue;
    }
    const double t_m = sum / cnt;
    if (!(t_m > 0.0)) {
      ++skipped;
      continue;
    }
    verts.push_back(t_m * theta.row(m).transpose());
  }
  if (skipped > 0)
    std::cerr << "hull: skipped " << skipped
              << " direction(s) with no assigned points\n";
  if (verts.empty())
    throw SolverError("hull: no usable directions, estimate degenerate");

  Mat V(static_cast<int>(verts.size()), p);
  for (size_t i = 0; i < verts.size(); ++i)
    V.row(static_cast<int>(i)) = verts[i].transpose();
  try {
    return ConvexBody::point_hull(V);
  } catch (const InputError& e) {
    throw SolverError(std::string("hull estimate degenerate: ") + e.what());
  }
}

inline int hull_default_k(int n) {
  if (n < 1) throw InputError("hull defaults: n must be positive");
  return std::max(1, static_cast<int>(std::floor(std::log(
                         static_cast<double>(n)))));
}

inline int hull_default_M(int n, int p) {
  if (n < 1 || p < 1) throw InputError("hull defaults: bad n or p");
  const double e = (p - 1.0) / (p + 1.0);
  return static_cast<int>(std::ceil(std::pow(static_cast<double>(n), e)));
}

// split N rows into n estimation rows + M direction rows with
// M >= default M(n); returns {n, M}
inline std::pair<int, int> hull_split(int N, int p) {
  if (N < 2) throw InputError("hull split: need at least two rows");
  int best_n = -1;
  int lo = 1, hi = N - 1;
  while (lo <= hi) {
    const int mid = (lo + hi) / 2;
    if (mid + hull_default_M(mid, p) <= N) {
      best_n = mid;
      lo = mid + 1;
    } else {
      hi = mid - 1;
    }
  }
  if (best_n < 1)
    throw InputError("hull split: not enough rows for the direction split");
  return {best_n, N - best_n};
}

}  // namespace hlc
