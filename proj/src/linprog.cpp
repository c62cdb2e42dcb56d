#include "wdm/linprog.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace wdm {

namespace {

constexpr double kPivotTol = 1e-10;

// Simplex over the tableau with Bland's rule. basis holds the column index of
// each basic variable. Returns false if unbounded.
bool run_simplex(Eigen::MatrixXd& T, Eigen::VectorXd& rhs, Eigen::RowVectorXd& cost,
                 double& obj, std::vector<int>& basis) {
  const int m = static_cast<int>(T.rows());
  const int n = static_cast<int>(T.cols());
  for (long iter = 0; iter < 200000; ++iter) {
    // Bland: entering = smallest index with negative reduced cost
    int enter = -1;
    for (int j = 0; j < n; ++j) {
      if (cost(j) < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;  // optimal

    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) > kPivotTol) {
        double ratio = rhs(i) / T(i, enter);
        if (ratio < best_ratio - kPivotTol ||
            (ratio < best_ratio + kPivotTol &&
             (leave < 0 || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) return false;  // unbounded

    // pivot on (leave, enter)
    double piv = T(leave, enter);
    T.row(leave) /= piv;
    rhs(leave) /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      double f = T(i, enter);
      if (f != 0.0) {
        T.row(i) -= f * T.row(leave);
        rhs(i) -= f * rhs(leave);
      }
    }
    double cf = cost(enter);
    if (cf != 0.0) {
      cost -= cf * T.row(leave);
      obj -= cf * rhs(leave);
    }
    basis[leave] = enter;
  }
  throw std::runtime_error("simplex: iteration limit exceeded");
}

}  // namespace

LpResult solve_lp_eq(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                     const Eigen::VectorXd& b) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (c.size() != n || b.size() != m)
    throw std::invalid_argument("solve_lp_eq: shape mismatch");

  // Phase 1 tableau with one artificial per row; flip rows so rhs >= 0.
  Eigen::MatrixXd T(m, n + m);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    double s = (b(i) < 0) ? -1.0 : 1.0;
    T.row(i).head(n) = s * A.row(i);
    rhs(i) = s * b(i);
  }
  T.rightCols(m) = Eigen::MatrixXd::Identity(m, m);

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  // phase-1 objective: sum of artificials, expressed in nonbasic terms
  Eigen::RowVectorXd cost1 = Eigen::RowVectorXd::Zero(n + m);
  double obj1 = 0.0;
  for (int i = 0; i < m; ++i) {
    cost1.head(n) -= T.row(i).head(n);
    obj1 -= rhs(i);
  }

  if (!run_simplex(T, rhs, cost1, obj1, basis))
    throw std::runtime_error("solve_lp_eq: phase-1 unbounded");

  LpResult res;
  if (obj1 < -1e-7) {
    res.feasible = false;
    return res;
  }

  // Drive remaining artificials out of the basis where possible.
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n) {
      int enter = -1;
      for (int j = 0; j < n; ++j) {
        if (std::abs(T(i, j)) > 1e-8) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) {
        double piv = T(i, enter);
        T.row(i) /= piv;
        rhs(i) /= piv;
        for (int k = 0; k < m; ++k) {
          if (k == i) continue;
          double f = T(k, enter);
          if (f != 0.0) {
            T.row(k) -= f * T.row(i);
            rhs(k) -= f * rhs(i);
          }
        }
        basis[i] = enter;
      }
      // else: redundant row, its artificial stays basic at zero
    }
  }

  // Phase 2: original costs reduced against the current basis.
  Eigen::RowVectorXd cost2(n + m);
  cost2.head(n) = c.transpose();
  cost2.tail(m).setZero();
  // artificials must not re-enter
  for (int j = n; j < n + m; ++j) cost2(j) = 1e30;
  double obj2 = 0.0;
  for (int i = 0; i < m; ++i) {
    double cb = (basis[i] < n) ? c(basis[i]) : 0.0;
    if (cb != 0.0) {
      cost2 -= cb * T.row(i);
      obj2 -= cb * rhs(i);
    }
  }
  for (int j = n; j < n + m; ++j) cost2(j) = std::max(cost2(j), 0.0);

  if (!run_simplex(T, rhs, cost2, obj2, basis)) {
    res.feasible = true;
    res.bounded = false;
    return res;
  }

  res.feasible = true;
  res.objective = -obj2;  // obj tracked as negated accumulation
  res.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) res.x(basis[i]) = rhs(i);
  res.objective = c.dot(res.x);

  // Duals: y = c_B^T B^{-1}; the artificial block of the tableau holds B^{-1}.
  // Phase-1 row flips are undone by the sign factor.
  res.duals = Eigen::VectorXd(m);
  for (int i = 0; i < m; ++i) {
    double y = 0.0;
    for (int k = 0; k < m; ++k) {
      if (basis[k] < n) y += c(basis[k]) * T(k, n + i);
    }
    double s = (b(i) < 0) ? -1.0 : 1.0;
    res.duals(i) = s * y;
  }
  return res;
}

}  // namespace wdm
