#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hlc/errors.hpp"

namespace hlc {

struct LpResult {
  enum class Status { kOptimal, kInfeasible, kUnbounded };
  Status status = Status::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};

// Dense two-phase primal simplex for  max c'x  s.t.  Ax = b, x >= 0.
// Bland's rule throughout (lowest eligible index), so the pivot sequence is
// deterministic and cycling-free. Tolerance applies to reduced costs, ratio
// pivots and the phase-1 feasibility check.
inline LpResult simplex_maximize(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& c,
                                 double tol = 1e-9) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (b.size() != m || c.size() != n)
    throw InputError("simplex_maximize: inconsistent dimensions");

  // tableau: m rows of [B^{-1}A | B^{-1}A_art | B^{-1}b]
  const int ncols = n + m + 1;
  Eigen::MatrixXd T(m, ncols);
  T.setZero();
  T.block(0, 0, m, n) = A;
  T.col(ncols - 1) = b;
  for (int i = 0; i < m; ++i) {
    if (T(i, ncols - 1) < 0.0) T.row(i) = -T.row(i);
    T(i, n + i) = 1.0;
  }

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  Eigen::VectorXd zrow(n + m);  // reduced costs of the active phase
  const std::int64_t max_pivots = 50000 + 200LL * (n + m);
  std::int64_t pivots = 0;

  auto pivot = [&](int row, int col) {
    T.row(row) /= T(row, col);
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = T(i, col);
      if (f != 0.0) T.row(i) -= f * T.row(row);
    }
    double f = zrow(col);
    if (f != 0.0) zrow.transpose() -= f * T.row(row).head(n + m);
    basis[row] = col;
  };

  auto run_phase = [&](int limit_cols) -> bool {
    // returns false on unboundedness
    for (;;) {
      int enter = -1;
      for (int j = 0; j < limit_cols; ++j) {
        if (zrow(j) > tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        double a = T(i, enter);
        if (a > tol) {
          double ratio = T(i, ncols - 1) / a;
          if (leave < 0 || ratio < best_ratio - tol) {
            leave = i;
            best_ratio = ratio;
          } else if (ratio < best_ratio + tol && basis[i] < basis[leave]) {
            leave = i;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
      if (++pivots > max_pivots)
        throw SolverError("simplex_maximize: pivot limit exceeded");
    }
  };

  // phase 1: maximize -sum(artificials); with the artificial basis the
  // reduced cost of column j is the column sum over rows
  zrow.setZero();
  for (int j = 0; j < n + m; ++j) zrow(j) = T.col(j).head(m).sum();
  for (int i = 0; i < m; ++i) zrow(n + i) = 0.0;
  if (!run_phase(n))
    throw SolverError("simplex_maximize: phase 1 unbounded");

  double art_sum = 0.0;
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) art_sum += T(i, ncols - 1);
  LpResult res;
  if (art_sum > tol) {
    res.status = LpResult::Status::kInfeasible;
    return res;
  }
  // drive residual artificials out of the basis where a structural pivot
  // exists; otherwise the row is redundant and the artificial stays at zero
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (int j = 0; j < n; ++j) {
      if (std::abs(T(i, j)) > tol) {
        pivot(i, j);
        break;
      }
    }
  }

  // phase 2 with the real objective
  zrow.setZero();
  zrow.head(n) = c;
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n && c(basis[i]) != 0.0)
      zrow.transpose() -= c(basis[i]) * T.row(i).head(n + m);
  }
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) zrow(basis[i]) = 0.0;
  if (!run_phase(n)) {
    res.status = LpResult::Status::kUnbounded;
    return res;
  }

  res.status = LpResult::Status::kOptimal;
  res.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) res.x(basis[i]) = T(i, ncols - 1);
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace hlc
