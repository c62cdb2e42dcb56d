#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "wdm/rng.hpp"
#include "wdm/tape.hpp"

using namespace wdm;
using ad::Tape;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(Rng& rng, int r, int c) {
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal() * 0.5;
  return m;
}

// central finite differences of scalar(params) w.r.t. every entry of params.
// build returns the scalar root node; backward runs exactly once, here.
void check_gradients(std::vector<MatrixXd> params,
                     const std::function<int(Tape&, std::vector<int>&)>& build,
                     double tol = 1e-6) {
  Tape tape;
  std::vector<int> ids;
  for (auto& p : params) ids.push_back(tape.param(p));
  std::vector<int> copy = ids;
  tape.backward(build(tape, copy));

  const double h = 1e-5;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    for (Eigen::Index k = 0; k < params[pi].size(); ++k) {
      auto eval = [&](double delta) {
        std::vector<MatrixXd> pp = params;
        pp[pi].data()[k] += delta;
        Tape t;
        std::vector<int> id2;
        for (auto& p : pp) id2.push_back(t.param(p));
        return t.val(build(t, id2))(0, 0);
      };
      double fd = (eval(h) - eval(-h)) / (2 * h);
      double an = tape.grad(ids[pi]).size() ? tape.grad(ids[pi]).data()[k] : 0.0;
      CHECK(std::abs(fd - an) <= tol * std::max(1.0, std::abs(fd)));
    }
  }
}

}  // namespace

TEST_CASE("forward values match Eigen") {
  Rng rng(1);
  MatrixXd A = random_matrix(rng, 3, 4), B = random_matrix(rng, 4, 2);
  Tape t;
  int a = t.constant(A), b = t.constant(B);
  CHECK((t.val(t.matmul(a, b)) - A * B).norm() < 1e-14);
  CHECK((t.val(t.matmul_tn(t.constant(A.transpose()), b)) - A * B).norm() < 1e-14);
  CHECK((t.val(t.matmul_nt(a, t.constant(B.transpose()))) - A * B).norm() < 1e-14);

  MatrixXd S = random_matrix(rng, 3, 3) * 3.0;
  int lse = t.row_logsumexp(t.constant(S));
  for (int i = 0; i < 3; ++i)
    CHECK(t.val(lse)(i, 0) == doctest::Approx(std::log(S.row(i).array().exp().sum())).epsilon(1e-12));
}

TEST_CASE("first-order gradients match finite differences") {
  Rng rng(2);
  std::vector<MatrixXd> params = {random_matrix(rng, 3, 4), random_matrix(rng, 1, 4),
                                  random_matrix(rng, 4, 4)};
  MatrixXd X = random_matrix(rng, 5, 3);
  check_gradients(params, [X](Tape& t, std::vector<int>& p) {
    int x = t.constant(X);
    int h = t.tanh_(t.add_rowvec(t.matmul(x, p[0]), p[1]));
    int s = t.matmul_nt(h, t.matmul(p[2], p[2]));  // use a param twice
    int l = t.row_logsumexp(t.matmul_nt(h, s));
    int d = t.diag_part(t.matmul_nt(h, s));
    int obj = t.mean(t.sub(d, l));
    int extra = t.mean(t.cmul(t.exp_(t.scale(h, 0.1)), t.sqrt_(t.square(h), 1e-3)));
    return t.add(obj, extra);
  });
}

TEST_CASE("linmap is a faithful linear map with adjoint backward") {
  Rng rng(3);
  auto plan = std::make_shared<ad::LinearPlan>();
  plan->in_rows = 3;
  plan->in_cols = 4;
  plan->out_rows = 5;
  plan->out_cols = 2;
  plan->src.resize(10);
  for (auto& s : plan->src)
    s = (rng.uniform() < 0.2) ? -1 : static_cast<int>(rng.uniform_int(12));

  MatrixXd X = random_matrix(rng, 3, 4), Y = random_matrix(rng, 5, 2);
  Tape t;
  int x = t.constant(X), y = t.constant(Y);
  MatrixXd LX = t.val(t.linmap(x, plan));
  MatrixXd LtY = t.val(t.linmap(y, plan, true));
  // adjoint identity <Lx, y> == <x, L^T y>
  CHECK((LX.array() * Y.array()).sum() ==
        doctest::Approx((X.array() * LtY.array()).sum()).epsilon(1e-12));

  std::vector<MatrixXd> params = {X};
  check_gradients(params, [plan, Y](Tape& tt, std::vector<int>& p) {
    int lx = tt.linmap(p[0], plan);
    return tt.mean(tt.square(tt.add(lx, tt.constant(Y))));
  });
}

TEST_CASE("double backprop: gradient-norm penalty parameter gradient is exact") {
  // f(x) = w . tanh(W x + b), penalty = mean_i (|grad_x f(x_i)| - 1)^2.
  // The input gradient is built as graph ops, so one backward() must produce
  // the exact parameter gradient of the penalty.
  Rng rng(4);
  const int K = 6, D = 3, H = 5;
  MatrixXd X = random_matrix(rng, K, D);
  std::vector<MatrixXd> params = {random_matrix(rng, H, D), random_matrix(rng, 1, H),
                                  random_matrix(rng, 1, H)};
  check_gradients(
      params,
      [X](Tape& t, std::vector<int>& p) {
        int x = t.constant(X);
        int a1 = t.add_rowvec(t.matmul_nt(x, p[0]), p[2]);  // (K, H)
        int h1 = t.tanh_(a1);
        // backprop to the input, in-graph: d_a1 = w * (1 - h1^2), g = d_a1 W
        int ones = t.constant(MatrixXd::Ones(X.rows(), 1));
        int w_rows = t.matmul(ones, p[1]);  // broadcast w to (K, H)
        int da1 = t.cmul(w_rows, t.add_scalar(t.scale(t.square(h1), -1.0), 1.0));
        int gx = t.matmul(da1, p[0]);  // (K, D)
        int norm = t.sqrt_(t.rowsum(t.square(gx)), 1e-12);
        return t.mean(t.square(t.add_scalar(norm, -1.0)));
      },
      1e-4);
}
