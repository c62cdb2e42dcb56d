#include "wdm/discrete.hpp"

#include <cmath>
#include <stdexcept>

#include "wdm/linprog.hpp"

namespace wdm {

void DiscreteJoint::validate() const {
  const auto nx = static_cast<Eigen::Index>(support_x.size());
  const auto ny = static_cast<Eigen::Index>(support_y.size());
  if (mass.rows() != nx || mass.cols() != ny)
    throw std::invalid_argument("DiscreteJoint: mass shape does not match supports");
  if ((mass.array() < 0).any())
    throw std::invalid_argument("DiscreteJoint: negative mass entry");
  if (std::abs(mass.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("DiscreteJoint: mass does not sum to 1");
  auto distinct = [](const std::vector<Eigen::VectorXd>& pts) {
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j)
        if (pts[i].size() == pts[j].size() && (pts[i] - pts[j]).norm() == 0.0)
          return false;
    return true;
  };
  if (!distinct(support_x) || !distinct(support_y))
    throw std::invalid_argument("DiscreteJoint: support points must be distinct");
}

GroundMetric GroundMetric::explicit_costs(Eigen::MatrixXd m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("metric: matrix not square");
  if ((m.array() < 0).any()) throw std::invalid_argument("metric: negative cost");
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i) {
    if (m(i, i) != 0.0) throw std::invalid_argument("metric: nonzero diagonal");
    for (int j = 0; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > 1e-12)
        throw std::invalid_argument("metric: not symmetric");
      for (int k = 0; k < n; ++k)
        if (m(i, j) > m(i, k) + m(k, j) + 1e-12)
          throw std::invalid_argument("metric: triangle inequality violated");
    }
  }
  GroundMetric g;
  g.kind = Kind::explicit_matrix;
  g.matrix = std::move(m);
  return g;
}

Eigen::MatrixXd GroundMetric::cost(const std::vector<Eigen::VectorXd>& support) const {
  const int n = static_cast<int>(support.size());
  if (kind == Kind::explicit_matrix) {
    if (matrix.rows() != n)
      throw std::invalid_argument("metric: explicit matrix shape mismatch");
    return matrix;
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Eigen::VectorXd& a = support[i];
      const Eigen::VectorXd& b = support[j];
      if (a.size() != b.size())
        throw std::invalid_argument("metric: support points of unequal dimension");
      double d = 0.0;
      if (kind == Kind::hamming) {
        for (Eigen::Index k = 0; k < a.size(); ++k)
          if (a(k) != b(k)) d += 1.0;
      } else {
        const Eigen::Index s = (split > 0 && split < a.size()) ? split : a.size();
        double d1 = (a.head(s) - b.head(s)).norm();
        double d2 = (a.size() > s) ? (a.tail(a.size() - s) - b.tail(a.size() - s)).norm() : 0.0;
        d = (kind == Kind::euclidean_l1_product) ? d1 + d2 : std::sqrt(d1 * d1 + d2 * d2);
      }
      c(i, j) = c(j, i) = d;
    }
  }
  return c;
}

double mi_discrete(const DiscreteJoint& joint) {
  joint.validate();
  const Eigen::VectorXd px = joint.marginal_x();
  const Eigen::VectorXd py = joint.marginal_y();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint.mass.rows(); ++i) {
    for (Eigen::Index j = 0; j < joint.mass.cols(); ++j) {
      const double m = joint.mass(i, j);
      if (m > 0.0) mi += m * std::log(m / (px(i) * py(j)));
    }
  }
  return std::max(mi, 0.0);
}

namespace {

void check_distribution(const Eigen::VectorXd& p, const char* name) {
  if ((p.array() < -1e-15).any())
    throw std::invalid_argument(std::string(name) + ": negative probability");
  if (std::abs(p.sum() - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(name) + ": not normalized");
}

}  // namespace

double wasserstein_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            const Eigen::MatrixXd& costs, Eigen::MatrixXd* coupling) {
  const int n = static_cast<int>(p.size());
  if (q.size() != n || costs.rows() != n || costs.cols() != n)
    throw std::invalid_argument("wasserstein_discrete: shape mismatch");
  if ((costs.array() < 0).any())
    throw std::invalid_argument("wasserstein_discrete: negative costs");
  check_distribution(p, "p");
  check_distribution(q, "q");

  // min sum_ij c_ij g_ij  s.t. row sums = p, col sums = q. The last column
  // constraint is redundant and dropped to keep full row rank.
  const int nv = n * n;
  const int nr = 2 * n - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nr, nv);
  Eigen::VectorXd b(nr);
  Eigen::VectorXd c(nv);
  for (int i = 0; i < n; ++i) {
    b(i) = p(i);
    for (int j = 0; j < n; ++j) {
      A(i, i * n + j) = 1.0;
      c(i * n + j) = costs(i, j);
      if (j < n - 1) A(n + j, i * n + j) = 1.0;
    }
  }
  for (int j = 0; j < n - 1; ++j) b(n + j) = q(j);

  LpResult r = solve_lp_eq(c, A, b);
  if (!r.feasible || !r.bounded)
    throw std::runtime_error("wasserstein_discrete: LP solve failed");
  if (coupling) {
    coupling->resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*coupling)(i, j) = r.x(i * n + j);
  }
  return r.objective;
}

double wasserstein_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                            const std::vector<Eigen::VectorXd>& support,
                            const GroundMetric& metric) {
  return wasserstein_discrete(p, q, metric.cost(support));
}

KrDual kr_dual_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                        const Eigen::MatrixXd& costs) {
  const int n = static_cast<int>(p.size());
  if (q.size() != n || costs.rows() != n || costs.cols() != n)
    throw std::invalid_argument("kr_dual_discrete: shape mismatch");
  check_distribution(p, "p");
  check_distribution(q, "q");

  // max f.(p - q)  s.t. f_a - f_b <= d(a, b) for all ordered pairs.
  // Variables: f = u - v with u, v >= 0, one slack per constraint.
  const int nc = n * (n - 1);
  const int nv = 2 * n + nc;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc, nv);
  Eigen::VectorXd b(nc);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
  const Eigen::VectorXd w = p - q;
  for (int i = 0; i < n; ++i) {
    c(i) = -w(i);  // minimize -w.f
    c(n + i) = w(i);
  }
  int row = 0;
  for (int a = 0; a < n; ++a) {
    for (int bdx = 0; bdx < n; ++bdx) {
      if (a == bdx) continue;
      A(row, a) = 1.0;
      A(row, n + a) = -1.0;
      A(row, bdx) = -1.0;
      A(row, n + bdx) = 1.0;
      A(row, 2 * n + row) = 1.0;
      b(row) = costs(a, bdx);
      ++row;
    }
  }
  LpResult r = solve_lp_eq(c, A, b);
  if (!r.feasible)
    throw std::runtime_error("kr_dual_discrete: infeasible LP (internal error)");
  if (!r.bounded)
    throw std::runtime_error("kr_dual_discrete: unbounded LP (internal error)");
  KrDual out;
  out.value = -r.objective;
  out.potentials = r.x.head(n) - r.x.segment(n, n);
  return out;
}

KrDual kr_dual_discrete(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                        const std::vector<Eigen::VectorXd>& support,
                        const GroundMetric& metric) {
  return kr_dual_discrete(p, q, metric.cost(support));
}

double wdm_discrete(const DiscreteJoint& joint, const GroundMetric& metric) {
  joint.validate();
  const int nx = static_cast<int>(joint.support_x.size());
  const int ny = static_cast<int>(joint.support_y.size());

  std::vector<Eigen::VectorXd> product_support;
  product_support.reserve(static_cast<size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      Eigen::VectorXd pt(joint.support_x[i].size() + joint.support_y[j].size());
      pt << joint.support_x[i], joint.support_y[j];
      product_support.push_back(std::move(pt));
    }
  }
  GroundMetric m = metric;
  if (m.kind != GroundMetric::Kind::explicit_matrix && m.split == 0)
    m.split = static_cast<int>(joint.support_x[0].size());

  const Eigen::VectorXd px = joint.marginal_x();
  const Eigen::VectorXd py = joint.marginal_y();
  Eigen::VectorXd flat(nx * ny), prod(nx * ny);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      flat(i * ny + j) = joint.mass(i, j);
      prod(i * ny + j) = px(i) * py(j);
    }
  }
  return wasserstein_discrete(flat, prod, product_support, m);
}

}  // namespace wdm
