#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "wdm/probe.hpp"
#include "wdm/rng.hpp"

using namespace wdm;
using Eigen::MatrixXd;
using Eigen::MatrixXi;

namespace {

// balanced labels for one factor, shuffled deterministically
MatrixXi balanced_labels(Rng& rng, int n, int c) {
  MatrixXi z(n, 1);
  for (int i = 0; i < n; ++i) z(i, 0) = i % c;
  for (int i = n - 1; i > 0; --i)
    std::swap(z(i, 0), z(rng.uniform_int(std::uint64_t(i) + 1), 0));
  return z;
}

}  // namespace

TEST_CASE("one-hot representations give perfect accuracy") {
  Rng rng(1);
  const int n = 200, c = 5;
  MatrixXi z = balanced_labels(rng, n, c);
  MatrixXd reps = MatrixXd::Zero(n, c);
  for (int i = 0; i < n; ++i) reps(i, z(i, 0)) = 1.0;
  auto r = fit_linear_probe(reps, z, {c}, 7);
  CHECK(r.per_factor_accuracy.size() == 1);
  CHECK(r.per_factor_accuracy[0] == doctest::Approx(1.0));
  CHECK(r.mean_accuracy == doctest::Approx(1.0));
  CHECK(r.degenerate_factor[0] == 0);
  // only c distinct (representation, label) rows exist here
  CHECK(r.n_train + r.n_test == c);
}

TEST_CASE("representations independent of the label score near chance") {
  Rng rng(2);
  const int n = 2000, c = 4;
  MatrixXi z = balanced_labels(rng, n, c);
  MatrixXd reps(n, 8);
  for (Eigen::Index i = 0; i < reps.size(); ++i) reps.data()[i] = rng.normal();
  auto r = fit_linear_probe(reps, z, {c}, 11);
  CHECK(r.n_train + r.n_test == n);
  CHECK(r.n_test == n / 5);
  // binomial noise on the test fold of 400 samples: sigma ~ sqrt(p(1-p)/m)
  double sigma = std::sqrt(0.25 * 0.75 / double(r.n_test));
  CHECK(std::abs(r.per_factor_accuracy[0] - 1.0 / c) < 3 * sigma + 0.02);
}

TEST_CASE("duplicating every sample leaves the result unchanged") {
  Rng rng(3);
  const int n = 120, c = 3;
  MatrixXi z = balanced_labels(rng, n, c);
  MatrixXd reps(n, 6);
  for (Eigen::Index i = 0; i < reps.size(); ++i) reps.data()[i] = rng.normal();
  // make the representation informative so accuracy is nontrivial
  for (int i = 0; i < n; ++i) reps(i, 0) += z(i, 0);

  MatrixXd reps2(2 * n, 6);
  MatrixXi z2(2 * n, 1);
  reps2 << reps, reps;
  z2 << z, z;

  auto a = fit_linear_probe(reps, z, {c}, 5);
  auto b = fit_linear_probe(reps2, z2, {c}, 5);
  CHECK(a.per_factor_accuracy[0] == b.per_factor_accuracy[0]);
  CHECK(a.n_train == b.n_train);
  CHECK(a.n_test == b.n_test);

  auto a2 = fit_linear_probe(reps, z, {c}, 5);
  CHECK(a.per_factor_accuracy[0] == a2.per_factor_accuracy[0]);
}

TEST_CASE("accuracy is affine-equivariant up to optimization tolerance") {
  Rng rng(4);
  const int n = 300, c = 3, d = 5;
  MatrixXi z = balanced_labels(rng, n, c);
  MatrixXd reps(n, d);
  for (Eigen::Index i = 0; i < reps.size(); ++i) reps.data()[i] = rng.normal();
  for (int i = 0; i < n; ++i) reps(i, 1) += 1.5 * z(i, 0);

  MatrixXd A(d, d);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
  A += 3.0 * MatrixXd::Identity(d, d);  // keep it well-conditioned
  Eigen::RowVectorXd shift(d);
  for (int j = 0; j < d; ++j) shift(j) = rng.uniform(-2, 2);
  MatrixXd mapped = (reps * A).rowwise() + shift;

  auto a = fit_linear_probe(reps, z, {c}, 13);
  auto b = fit_linear_probe(mapped, z, {c}, 13);
  CHECK(std::abs(a.per_factor_accuracy[0] - b.per_factor_accuracy[0]) <= 0.01);
}

TEST_CASE("degenerate factor is flagged with accuracy 1.0") {
  MatrixXd reps = MatrixXd::Random(40, 3);
  MatrixXi z(40, 2);
  z.col(0).setZero();                            // single class
  for (int i = 0; i < 40; ++i) z(i, 1) = i % 2;  // honest factor
  auto r = fit_linear_probe(reps, z, {4, 2}, 0);
  CHECK(r.per_factor_accuracy[0] == 1.0);
  CHECK(r.degenerate_factor[0] == 1);
  CHECK(r.degenerate_factor[1] == 0);
  CHECK(r.mean_accuracy ==
        doctest::Approx(0.5 * (1.0 + r.per_factor_accuracy[1])));
}

TEST_CASE("label validation") {
  MatrixXd reps = MatrixXd::Random(10, 2);
  MatrixXi z = MatrixXi::Zero(10, 1);
  z(3, 0) = 5;
  CHECK_THROWS(fit_linear_probe(reps, z, {4}, 0));
  CHECK_THROWS(fit_linear_probe(reps, MatrixXi::Zero(9, 1), {4}, 0));
  CHECK_THROWS(fit_linear_probe(reps, MatrixXi::Zero(10, 1), {0}, 0));
}

TEST_CASE("evaluate_model probes x-side representations without mutating them") {
  GlyphDatasetSpec spec;
  spec.layout = GlyphDatasetSpec::Layout::stacked;
  spec.alphabet_sizes = {4};
  spec.cell_px = 16;
  spec.n_samples = 160;
  spec.seed = 21;
  PairDataset ds = generate_glyph_pairs(spec);

  auto cfg = EncoderConfig::default_mlp(ds.x_shape, 8);
  auto state = init_critic(cfg, cfg, CriticState::Coupling::separable_dot, 77);
  std::vector<Eigen::MatrixXd> before;
  for (auto* p : state.all_params()) before.push_back(*p);

  auto r = evaluate_model(state, ds, 3);
  CHECK(r.per_factor_accuracy.size() == ds.factor_cardinalities.size());
  for (double a : r.per_factor_accuracy) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }

  auto params = state.all_params();
  for (size_t i = 0; i < params.size(); ++i) CHECK(*params[i] == before[i]);

  // constant encoder: accuracy equals the majority-class rate on the test fold
  state.params_x.W.back().setZero();
  state.params_x.b.back().setZero();
  auto rc = evaluate_model(state, ds, 3);
  // glyph chars are near-uniform, so the majority rate is close to 1/4
  CHECK(rc.per_factor_accuracy[0] < 0.5);
}
