#include "wdm/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "wdm/rng.hpp"

namespace wdm {

void ObjectiveConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("objective config: batch size must be >= 2");
  if (penalty_coeff < 0)
    throw std::invalid_argument("objective config: penalty coefficient must be >= 0");
}

double cpc_objective(const Eigen::MatrixXd& scores) {
  const Eigen::Index K = scores.rows();
  if (scores.cols() != K || K < 2)
    throw std::invalid_argument("cpc_objective: scores must be square with K >= 2");
  if (!scores.allFinite()) throw std::invalid_argument("cpc_objective: non-finite scores");
  double j = 0.0;
  for (Eigen::Index i = 0; i < K; ++i) {
    const double m = scores.row(i).maxCoeff();
    const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
    j += scores(i, i) - lse;
  }
  return j / double(K);
}

double mi_estimate(double objective, int batch_size) {
  return objective + std::log(double(batch_size));
}

double wpc_objective(const Eigen::MatrixXd& scores, double gradient_penalty,
                     double penalty_coeff) {
  if (gradient_penalty < 0)
    throw std::invalid_argument("wpc_objective: negative gradient penalty");
  return cpc_objective(scores) - penalty_coeff * gradient_penalty;
}

double wdm_dual_objective(const Eigen::MatrixXd& scores, double gradient_penalty,
                          double penalty_coeff) {
  const Eigen::Index K = scores.rows();
  if (scores.cols() != K || K < 2)
    throw std::invalid_argument("wdm_dual_objective: scores must be square with K >= 2");
  const double diag = scores.diagonal().sum();
  const double off = scores.sum() - diag;
  return diag / double(K) - off / double(K * (K - 1)) - penalty_coeff * gradient_penalty;
}

CriticForward build_critic_forward(ad::Tape& tape, const CriticState& state,
                                   const CriticGraphParams& params,
                                   const Eigen::MatrixXd& x_batch,
                                   const Eigen::MatrixXd& y_batch) {
  CriticForward f;
  f.graph_x = build_encoder_graph(tape, state.config_x, params.wx, params.bx,
                                  tape.constant(x_batch));
  f.graph_y = build_encoder_graph(tape, state.config_y, params.wy, params.by,
                                  tape.constant(y_batch));
  f.zx = f.graph_x.output;
  f.zy = f.graph_y.output;
  if (state.coupling == CriticState::Coupling::separable_dot) {
    f.scores = tape.matmul_nt(f.zx, f.zy);
  } else {
    f.scores = tape.matmul_nt(tape.matmul(f.zx, params.bilinear), f.zy);
  }
  return f;
}

int build_cpc_objective(ad::Tape& tape, int scores) {
  return tape.mean(tape.sub(tape.diag_part(scores), tape.row_logsumexp(scores)));
}

int build_wdm_dual_term(ad::Tape& tape, int scores) {
  const Eigen::Index K = tape.val(scores).rows();
  int diag_sum = tape.sum(tape.diag_part(scores));
  int off_sum = tape.sub(tape.sum(scores), diag_sum);
  return tape.sub(tape.scale(diag_sum, 1.0 / double(K)),
                  tape.scale(off_sum, 1.0 / double(K * (K - 1))));
}

int build_gradient_penalty(ad::Tape& tape, const CriticState& state,
                           const CriticGraphParams& params, const Eigen::MatrixXd& x_pos,
                           const Eigen::MatrixXd& y_pos, const Eigen::MatrixXd& x_neg,
                           const Eigen::MatrixXd& y_neg, std::uint64_t interpolation_seed,
                           double penalty_target) {
  const Eigen::Index K = x_pos.rows();
  if (y_pos.rows() != K || x_neg.rows() != K || y_neg.rows() != K ||
      x_neg.cols() != x_pos.cols() || y_neg.cols() != y_pos.cols())
    throw std::invalid_argument("gradient_penalty: batch shapes do not match");

  // one interpolation coefficient per sample, shared between the x and y legs
  Rng rng(hash_combine(0x6770ULL, interpolation_seed));
  Eigen::VectorXd eps(K);
  for (Eigen::Index i = 0; i < K; ++i) eps(i) = rng.uniform();

  Eigen::MatrixXd x_mix = eps.asDiagonal() * x_pos +
                          (Eigen::VectorXd::Ones(K) - eps).asDiagonal() * x_neg;
  Eigen::MatrixXd y_mix = eps.asDiagonal() * y_pos +
                          (Eigen::VectorXd::Ones(K) - eps).asDiagonal() * y_neg;

  CriticForward f = build_critic_forward(tape, state, params, x_mix, y_mix);

  // cotangents of sum_i f(x_i, y_i) w.r.t. the two representations
  int cot_zx, cot_zy;
  if (state.coupling == CriticState::Coupling::separable_dot) {
    cot_zx = f.zy;
    cot_zy = f.zx;
  } else {
    cot_zx = tape.matmul_nt(f.zy, params.bilinear);
    cot_zy = tape.matmul(f.zx, params.bilinear);
  }
  int gx = build_input_gradient(tape, f.graph_x, cot_zx);
  int gy = build_input_gradient(tape, f.graph_y, cot_zy);

  int sq = tape.add(tape.rowsum(tape.square(gx)), tape.rowsum(tape.square(gy)));
  int norm = tape.sqrt_(sq, 1e-12);
  return tape.mean(tape.square(tape.add_scalar(norm, -penalty_target)));
}

double gradient_penalty(const CriticState& state, const Eigen::MatrixXd& x_pos,
                        const Eigen::MatrixXd& y_pos, const Eigen::MatrixXd& x_neg,
                        const Eigen::MatrixXd& y_neg, std::uint64_t interpolation_seed,
                        double penalty_target) {
  ad::Tape tape;
  CriticGraphParams params = register_critic_params(tape, state);
  int gp = build_gradient_penalty(tape, state, params, x_pos, y_pos, x_neg, y_neg,
                                  interpolation_seed, penalty_target);
  double v = tape.val(gp)(0, 0);
  if (!std::isfinite(v)) throw std::runtime_error("gradient_penalty: non-finite value");
  return v;
}

}  // namespace wdm
