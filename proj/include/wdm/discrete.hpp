#ifndef WDM_DISCRETE_HPP
#define WDM_DISCRETE_HPP

#include <Eigen/Dense>
#include <vector>

namespace wdm {

// Finite joint distribution over two labeled supports. Ground truth carrier
// for the exact mutual-information and dependency-measure oracles.
struct DiscreteJoint {
  std::vector<Eigen::VectorXd> support_x;
  std::vector<Eigen::VectorXd> support_y;
  Eigen::MatrixXd mass;  // (|X|, |Y|), nonnegative, sums to 1

  void validate() const;  // throws std::invalid_argument on violation

  Eigen::VectorXd marginal_x() const { return mass.rowwise().sum(); }
  Eigen::VectorXd marginal_y() const { return mass.colwise().sum().transpose(); }
};

struct GroundMetric {
  enum class Kind { euclidean_l1_product, euclidean_l2_product, hamming, explicit_matrix };

  Kind kind = Kind::euclidean_l2_product;
  Eigen::MatrixXd matrix;  // explicit_matrix only
  // For the product kinds: number of leading coordinates belonging to the
  // first axis. 0 means "single axis" (whole vector is one block).
  int split = 0;

  // Pairwise cost matrix over a shared support.
  Eigen::MatrixXd cost(const std::vector<Eigen::VectorXd>& support) const;

  static GroundMetric explicit_costs(Eigen::MatrixXd m);
};

// Exact mutual information in nats: sum m_ij ln(m_ij / (row_i col_j)).
double mi_discrete(const DiscreteJoint& joint);

// Exact optimal-transport cost between two distributions over a shared
// support, solved as a linear program. Marginal feasibility holds to 1e-9.
double wasserstein_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            const std::vector<Eigen::VectorXd>& support,
                            const GroundMetric& metric);

// Same, with an explicit cost matrix and access to the optimal coupling.
double wasserstein_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            const Eigen::MatrixXd& costs,
                            Eigen::MatrixXd* coupling = nullptr);

struct KrDual {
  double value = 0.0;
  Eigen::VectorXd potentials;  // one per support point
};

// Kantorovich-Rubinstein dual: max f.(p - q) s.t. |f_a - f_b| <= d(a, b),
// solved as its own linear program (not derived from the primal basis).
KrDual kr_dual_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                        const Eigen::MatrixXd& costs);
KrDual kr_dual_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                        const std::vector<Eigen::VectorXd>& support,
                        const GroundMetric& metric);

// Wasserstein dependency measure: transport cost between the flattened joint
// and the product of its marginals over the product support.
double wdm_discrete(const DiscreteJoint& joint, const GroundMetric& metric);

}  // namespace wdm

#endif
