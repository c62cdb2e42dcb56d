#ifndef WDM_OBJECTIVE_HPP
#define WDM_OBJECTIVE_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "wdm/model.hpp"
#include "wdm/tape.hpp"

namespace wdm {

struct ObjectiveConfig {
  enum class Kind { cpc, wpc, wdm_dual };

  Kind kind = Kind::cpc;
  double penalty_coeff = 10.0;  // lambda; 0 reduces wpc to cpc exactly
  double penalty_target = 1.0;
  int batch_size = 64;

  void validate() const;
};

// J = (1/K) sum_i [S_ii - log sum_j exp S_ij]; the positive pair is part of
// the denominator, so J <= 0 for every finite S.
double cpc_objective(const Eigen::MatrixXd& scores);

// Standard in-batch reporting convention: estimate = J + ln K <= ln K.
double mi_estimate(double objective, int batch_size);

double wpc_objective(const Eigen::MatrixXd& scores, double gradient_penalty,
                     double penalty_coeff);

// (1/K) sum_i S_ii - (1/(K(K-1))) sum_{i != j} S_ij - lambda * GP; the
// off-diagonal entries stand in for the product of marginals.
double wdm_dual_objective(const Eigen::MatrixXd& scores, double gradient_penalty,
                          double penalty_coeff);

// Two-sided gradient penalty at interpolates between paired and unpaired
// batches: mean over samples of (|grad_{(x,y)} f| - target)^2, gradients taken
// w.r.t. the raw critic inputs.
double gradient_penalty(const CriticState& state, const Eigen::MatrixXd& x_pos,
                        const Eigen::MatrixXd& y_pos, const Eigen::MatrixXd& x_neg,
                        const Eigen::MatrixXd& y_neg, std::uint64_t interpolation_seed,
                        double penalty_target = 1.0);

// Graph builders used by the training loop (parameters stay differentiable).
struct CriticForward {
  EncoderGraph graph_x, graph_y;
  int zx = -1, zy = -1;
  int scores = -1;
};
CriticForward build_critic_forward(ad::Tape& tape, const CriticState& state,
                                   const CriticGraphParams& params,
                                   const Eigen::MatrixXd& x_batch,
                                   const Eigen::MatrixXd& y_batch);

int build_cpc_objective(ad::Tape& tape, int scores);
int build_wdm_dual_term(ad::Tape& tape, int scores);  // without the penalty
int build_gradient_penalty(ad::Tape& tape, const CriticState& state,
                           const CriticGraphParams& params, const Eigen::MatrixXd& x_pos,
                           const Eigen::MatrixXd& y_pos, const Eigen::MatrixXd& x_neg,
                           const Eigen::MatrixXd& y_neg, std::uint64_t interpolation_seed,
                           double penalty_target = 1.0);

}  // namespace wdm

#endif
