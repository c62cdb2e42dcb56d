#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "wdm/model.hpp"
#include "wdm/rng.hpp"
#include "wdm/tape.hpp"

using namespace wdm;
using Eigen::MatrixXd;

namespace {

MatrixXd random_matrix(Rng& rng, int r, int c, double s = 1.0) {
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("encode: determinism and batch handling") {
  auto cfg = EncoderConfig::default_mlp({1, 4, 4}, 8);
  auto state = init_critic(cfg, cfg, CriticState::Coupling::separable_dot, 42);

  Rng rng(1);
  MatrixXd batch = random_matrix(rng, 5, 16);
  MatrixXd z1 = encode(state, Side::x_side, batch);
  MatrixXd z2 = encode(state, Side::x_side, batch);
  CHECK(z1 == z2);
  CHECK(z1.rows() == 5);
  CHECK(z1.cols() == 8);
  CHECK(z1.allFinite());

  // identical inputs give identical rows
  MatrixXd dup(2, 16);
  dup.row(0) = batch.row(0);
  dup.row(1) = batch.row(0);
  MatrixXd zd = encode(state, Side::x_side, dup);
  CHECK(zd.row(0) == zd.row(1));

  // zeroed final layer gives all-zero representations
  state.params_x.W.back().setZero();
  state.params_x.b.back().setZero();
  CHECK(encode(state, Side::x_side, batch).norm() == 0.0);

  MatrixXd bad = random_matrix(rng, 5, 15);
  CHECK_THROWS(encode(state, Side::x_side, bad));
}

TEST_CASE("score_matrix forms") {
  auto cfg = EncoderConfig::default_mlp({1, 2, 2}, 3);
  auto state = init_critic(cfg, cfg, CriticState::Coupling::separable_dot, 0);

  MatrixXd I = MatrixXd::Identity(3, 3);
  CHECK((score_matrix(state, I, I) - I).norm() == 0.0);
  CHECK(score_matrix(state, I, MatrixXd::Zero(3, 3)).norm() == 0.0);

  Rng rng(2);
  MatrixXd zx = random_matrix(rng, 2, 3), zy = random_matrix(rng, 2, 3);
  MatrixXd S = score_matrix(state, zx, zy);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(S(i, j) == doctest::Approx(zx.row(i).dot(zy.row(j))).epsilon(1e-14));

  // row-permutation equivariance
  MatrixXd zxp(2, 3);
  zxp.row(0) = zx.row(1);
  zxp.row(1) = zx.row(0);
  MatrixXd Sp = score_matrix(state, zxp, zy);
  CHECK((Sp.row(0) - S.row(1)).norm() == 0.0);
  CHECK((Sp.row(1) - S.row(0)).norm() == 0.0);

  auto bil = init_critic(cfg, cfg, CriticState::Coupling::bilinear, 7);
  MatrixXd Sb = score_matrix(bil, zx, zy);
  CHECK(Sb(0, 1) ==
        doctest::Approx((zx.row(0) * bil.bilinear * zy.row(1).transpose())(0)).epsilon(1e-14));
}

TEST_CASE("mean-score parameter gradient matches finite differences on a 2-4-2 mlp") {
  EncoderConfig cfg;
  cfg.arch = EncoderConfig::Arch::mlp;
  cfg.input_shape = {1, 1, 2};
  cfg.hidden = {4};
  cfg.repr_dim = 2;
  auto state = init_critic(cfg, cfg, CriticState::Coupling::separable_dot, 3);

  Rng rng(5);
  MatrixXd X = random_matrix(rng, 6, 2), Y = random_matrix(rng, 6, 2);

  auto mean_score = [&](const CriticState& s) {
    MatrixXd zx = encode(s, Side::x_side, X);
    MatrixXd zy = encode(s, Side::y_side, Y);
    return score_matrix(s, zx, zy).mean();
  };

  // analytic gradient via the tape
  ad::Tape tape;
  auto gparams = register_critic_params(tape, state);
  auto gx = build_encoder_graph(tape, cfg, gparams.wx, gparams.bx, tape.constant(X));
  auto gy = build_encoder_graph(tape, cfg, gparams.wy, gparams.by, tape.constant(Y));
  tape.backward(tape.mean(tape.matmul_nt(gx.output, gy.output)));

  auto params = state.all_params();
  const double h = 1e-6;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    for (Eigen::Index k = 0; k < params[pi]->size(); ++k) {
      CriticState sp = state, sm = state;
      sp.all_params()[pi]->data()[k] += h;
      sm.all_params()[pi]->data()[k] -= h;
      double fd = (mean_score(sp) - mean_score(sm)) / (2 * h);
      double an = tape.grad(gparams.ordered[pi]).size()
                      ? tape.grad(gparams.ordered[pi]).data()[k]
                      : 0.0;
      CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("conv encoder matches a direct convolution oracle") {
  EncoderConfig cfg;
  cfg.arch = EncoderConfig::Arch::conv;
  cfg.input_shape = {2, 8, 8};
  cfg.hidden = {3, 4};
  cfg.repr_dim = 5;
  auto params = init_encoder_params(cfg, 11);

  Rng rng(6);
  const int K = 3;
  MatrixXd batch = random_matrix(rng, K, cfg.input_dim(), 0.5);

  // direct evaluation: 3x3 stride-2 pad-1 conv blocks with tanh, linear head
  auto conv_layer = [](const Eigen::VectorXd& in, int C, int H, int W,
                       const MatrixXd& weight, const MatrixXd& bias, int C_out) {
    const int oH = H / 2, oW = W / 2;
    Eigen::VectorXd out(C_out * oH * oW);
    for (int co = 0; co < C_out; ++co) {
      for (int oy = 0; oy < oH; ++oy) {
        for (int ox = 0; ox < oW; ++ox) {
          double acc = bias(0, co);
          for (int ci = 0; ci < C; ++ci)
            for (int dy = 0; dy < 3; ++dy)
              for (int dx = 0; dx < 3; ++dx) {
                int iy = oy * 2 - 1 + dy, ix = ox * 2 - 1 + dx;
                if (iy >= 0 && iy < H && ix >= 0 && ix < W)
                  acc += in(ci * H * W + iy * W + ix) * weight(ci * 9 + dy * 3 + dx, co);
              }
          out(co * oH * oW + oy * oW + ox) = std::tanh(acc);
        }
      }
    }
    return out;
  };

  CriticState state;
  state.config_x = state.config_y = cfg;
  state.params_x = state.params_y = params;
  MatrixXd z = encode(state, Side::x_side, batch);

  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd v = batch.row(k).transpose();
    int C = 2, H = 8, W = 8;
    for (size_t l = 0; l < cfg.hidden.size(); ++l) {
      v = conv_layer(v, C, H, W, params.W[l], params.b[l], cfg.hidden[l]);
      C = cfg.hidden[l];
      H /= 2;
      W /= 2;
    }
    Eigen::VectorXd head =
        params.W.back() * v + params.b.back().transpose();
    CHECK((z.row(k).transpose() - head).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("checkpoint round-trip") {
  auto cfg = EncoderConfig::default_mlp({1, 4, 4}, 6);
  auto state = init_critic(cfg, cfg, CriticState::Coupling::bilinear, 9);
  auto path = std::filesystem::temp_directory_path() / "wdm_ckpt_test.bin";
  save_checkpoint(path, state);
  auto loaded = load_checkpoint(path);

  auto a = state.all_params();
  auto b = loaded.all_params();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
  CHECK(loaded.config_x.hidden == cfg.hidden);
  CHECK(loaded.coupling == CriticState::Coupling::bilinear);
  std::filesystem::remove(path);
}
