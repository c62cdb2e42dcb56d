#include "wdm/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "wdm/rng.hpp"

namespace wdm {

namespace {

constexpr double kL2 = 1e-4;
constexpr double kTol = 1e-6;
constexpr int kMaxIters = 5000;

// drop exact duplicate (representation, label) rows, keeping first-seen order
std::vector<int> unique_rows(const Eigen::MatrixXd& reps, const Eigen::MatrixXi& labels) {
  std::unordered_set<std::string> seen;
  std::vector<int> keep;
  const int n = static_cast<int>(reps.rows());
  std::string key;
  for (int i = 0; i < n; ++i) {
    key.assign(reinterpret_cast<const char*>(reps.row(i).eval().data()),
               reps.cols() * sizeof(double));
    key.append(reinterpret_cast<const char*>(labels.row(i).eval().data()),
               labels.cols() * sizeof(int));
    if (seen.insert(key).second) keep.push_back(i);
  }
  return keep;
}

// stratified 80/20: each class sheds floor(20%) of its samples to the test set
void split_factor(const std::vector<int>& rows, const Eigen::MatrixXi& labels, int factor,
                  int cardinality, std::uint64_t seed, std::vector<int>& train,
                  std::vector<int>& test) {
  std::vector<std::vector<int>> by_class(cardinality);
  for (int r : rows) by_class.at(labels(r, factor)).push_back(r);
  Rng rng(hash_combine(0x73706c69ULL, hash_combine(seed, std::uint64_t(factor))));
  for (auto& cls : by_class) {
    for (int i = static_cast<int>(cls.size()) - 1; i > 0; --i)
      std::swap(cls[i], cls[rng.uniform_int(std::uint64_t(i) + 1)]);
    const int n_test = static_cast<int>(cls.size()) / 5;
    test.insert(test.end(), cls.begin(), cls.begin() + n_test);
    train.insert(train.end(), cls.begin() + n_test, cls.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
}

// softmax regression via Barzilai-Borwein gradient descent; the objective is
// smooth and strongly convex, so the stopping rule is a gradient norm test
Eigen::MatrixXd fit_softmax(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, int c) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());  // includes the bias column
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(c, d);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, c);
  for (int i = 0; i < n; ++i) Y(i, y(i)) = 1.0;

  auto gradient = [&](const Eigen::MatrixXd& w) {
    Eigen::MatrixXd logits = X * w.transpose();
    Eigen::VectorXd mx = logits.rowwise().maxCoeff();
    Eigen::MatrixXd P = (logits.colwise() - mx).array().exp();
    P.array().colwise() /= P.rowwise().sum().array();
    Eigen::MatrixXd g = (P - Y).transpose() * X / double(n) + kL2 * w;
    g.col(d - 1) -= kL2 * w.col(d - 1);  // bias is not regularized
    return g;
  };

  Eigen::MatrixXd g = gradient(W);
  double step = 1.0;
  for (int it = 0; it < kMaxIters; ++it) {
    if (g.cwiseAbs().maxCoeff() <= kTol) break;
    Eigen::MatrixXd W_next = W - step * g;
    Eigen::MatrixXd g_next = gradient(W_next);
    Eigen::MatrixXd s = W_next - W, dg = g_next - g;
    double denom = (s.array() * dg.array()).sum();
    step = denom > 1e-18 ? s.squaredNorm() / denom : 1.0;
    step = std::clamp(step, 1e-8, 1e6);
    W = std::move(W_next);
    g = std::move(g_next);
  }
  return W;
}

}  // namespace

ProbeResult fit_linear_probe(const Eigen::MatrixXd& representations,
                             const Eigen::MatrixXi& labels,
                             const std::vector<int>& cardinalities,
                             std::uint64_t split_seed) {
  const int n = static_cast<int>(representations.rows());
  const int n_factors = static_cast<int>(cardinalities.size());
  if (labels.rows() != n || labels.cols() != n_factors)
    throw std::invalid_argument("fit_linear_probe: label shape mismatch");
  if (!representations.allFinite())
    throw std::invalid_argument("fit_linear_probe: non-finite representations");
  for (int f = 0; f < n_factors; ++f) {
    if (cardinalities[f] < 1) throw std::invalid_argument("fit_linear_probe: bad cardinality");
    for (int i = 0; i < n; ++i)
      if (labels(i, f) < 0 || labels(i, f) >= cardinalities[f])
        throw std::invalid_argument("fit_linear_probe: label out of range");
  }

  std::vector<int> rows = unique_rows(representations, labels);

  // per-feature standardization for conditioning (fitted weights absorb it)
  const int d = static_cast<int>(representations.cols());
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(d), sigma = Eigen::RowVectorXd::Ones(d);
  for (int j = 0; j < d; ++j) {
    double m = 0, m2 = 0;
    for (int r : rows) m += representations(r, j);
    m /= double(rows.size());
    for (int r : rows) m2 += std::pow(representations(r, j) - m, 2);
    mu(j) = m;
    sigma(j) = std::max(std::sqrt(m2 / double(rows.size())), 1e-8);
  }

  ProbeResult result;
  result.factor_cardinalities = cardinalities;
  for (int f = 0; f < n_factors; ++f) {
    std::unordered_set<int> classes;
    for (int r : rows) classes.insert(labels(r, f));
    if (classes.size() < 2) {
      result.per_factor_accuracy.push_back(1.0);
      result.degenerate_factor.push_back(1);
      continue;
    }
    result.degenerate_factor.push_back(0);

    std::vector<int> train, test;
    split_factor(rows, labels, f, cardinalities[f], split_seed, train, test);
    if (f == 0 || result.n_train == 0) {
      result.n_train = static_cast<int>(train.size());
      result.n_test = static_cast<int>(test.size());
    }
    const std::vector<int>& eval_rows = test.empty() ? train : test;

    auto design = [&](const std::vector<int>& idx) {
      Eigen::MatrixXd X(idx.size(), d + 1);
      for (size_t i = 0; i < idx.size(); ++i) {
        X.row(i).head(d) =
            (representations.row(idx[i]) - mu).array() / sigma.array();
        X(i, d) = 1.0;
      }
      return X;
    };
    Eigen::VectorXi y_train(train.size());
    for (size_t i = 0; i < train.size(); ++i) y_train(i) = labels(train[i], f);

    Eigen::MatrixXd W = fit_softmax(design(train), y_train, cardinalities[f]);

    Eigen::MatrixXd logits = design(eval_rows) * W.transpose();
    int correct = 0;
    for (size_t i = 0; i < eval_rows.size(); ++i) {
      Eigen::Index pred;
      logits.row(i).maxCoeff(&pred);
      if (static_cast<int>(pred) == labels(eval_rows[i], f)) ++correct;
    }
    result.per_factor_accuracy.push_back(double(correct) / double(eval_rows.size()));
  }

  result.mean_accuracy =
      std::accumulate(result.per_factor_accuracy.begin(), result.per_factor_accuracy.end(),
                      0.0) /
      double(result.per_factor_accuracy.size());
  return result;
}

ProbeResult evaluate_model(const CriticState& state, const PairDataset& dataset,
                           std::uint64_t split_seed) {
  Eigen::MatrixXd reps = encode(state, Side::x_side, dataset.x);
  return fit_linear_probe(reps, dataset.z, dataset.factor_cardinalities, split_seed);
}

}  // namespace wdm
