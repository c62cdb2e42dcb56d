#ifndef WDM_LINPROG_HPP
#define WDM_LINPROG_HPP

#include <Eigen/Dense>

namespace wdm {

struct LpResult {
  bool feasible = false;
  bool bounded = true;
  double objective = 0.0;
  Eigen::VectorXd x;      // primal solution
  Eigen::VectorXd duals;  // one multiplier per equality row
};

// Minimize c'x subject to A x = b, x >= 0.
// Dense two-phase simplex; intended for small exact instances.
LpResult solve_lp_eq(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                     const Eigen::VectorXd& b);

}  // namespace wdm

#endif
