#include "wdm/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "wdm/rng.hpp"

namespace wdm {

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("train config: steps must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("train config: batch size must be >= 2");
  if (learning_rate <= 0) throw std::invalid_argument("train config: learning rate must be > 0");
  if (eval_every < 1) throw std::invalid_argument("train config: eval_every must be >= 1");
}

void RunLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("run log: cannot open " + path.string());
  os << "step,objective,mi_estimate,gp,wallclock_s\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.step, r.objective,
                  r.mi_estimate, r.gp, r.wallclock_s);
    os << buf;
  }
  if (!os) throw std::runtime_error("run log: write failed for " + path.string());
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(idx.size(), m.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

struct AdamState {
  std::vector<Eigen::MatrixXd> m, v;
  int t = 0;
};

}  // namespace

std::pair<CriticState, RunLog> train(const PairDataset& dataset,
                                     const EncoderConfig& encoder_cfg,
                                     const ObjectiveConfig& objective_cfg,
                                     const TrainConfig& train_cfg) {
  train_cfg.validate();
  objective_cfg.validate();
  if (dataset.n_samples() < 1) throw std::invalid_argument("train: empty dataset");
  if (dataset.x_shape != encoder_cfg.input_shape)
    throw std::invalid_argument("train: encoder shape does not match dataset.x");

  EncoderConfig cfg_y = encoder_cfg;
  cfg_y.input_shape = dataset.y_shape;
  CriticState state = init_critic(encoder_cfg, cfg_y, CriticState::Coupling::separable_dot,
                                  hash_combine(train_cfg.seed, 0x1217ULL));

  RunLog log;
  const int K = train_cfg.batch_size;
  const int n = dataset.n_samples();
  const double lnK = std::log(double(K));
  const bool penalized = objective_cfg.kind != ObjectiveConfig::Kind::cpc;

  Rng batch_rng(hash_combine(train_cfg.seed, 0xb41cULL));
  auto params = state.all_params();
  AdamState adam;
  adam.m.resize(params.size());
  adam.v.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    adam.m[i] = Eigen::MatrixXd::Zero(params[i]->rows(), params[i]->cols());
    adam.v[i] = adam.m[i];
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  for (int step = 1; step <= train_cfg.steps; ++step) {
    std::vector<int> idx(K), idx_nx(K), idx_ny(K);
    for (int i = 0; i < K; ++i) idx[i] = static_cast<int>(batch_rng.uniform_int(n));
    if (penalized)
      for (int i = 0; i < K; ++i) {
        idx_nx[i] = static_cast<int>(batch_rng.uniform_int(n));
        idx_ny[i] = static_cast<int>(batch_rng.uniform_int(n));
      }

    Eigen::MatrixXd xb = gather_rows(dataset.x, idx), yb = gather_rows(dataset.y, idx);

    ad::Tape tape;
    CriticGraphParams gparams = register_critic_params(tape, state);
    CriticForward fwd = build_critic_forward(tape, state, gparams, xb, yb);

    int root;
    double gp_value = 0.0;
    if (objective_cfg.kind == ObjectiveConfig::Kind::cpc) {
      root = build_cpc_objective(tape, fwd.scores);
    } else {
      int gp = build_gradient_penalty(tape, state, gparams, xb, yb,
                                      gather_rows(dataset.x, idx_nx),
                                      gather_rows(dataset.y, idx_ny),
                                      hash_combine(train_cfg.seed, std::uint64_t(step)),
                                      objective_cfg.penalty_target);
      gp_value = tape.val(gp)(0, 0);
      int base = objective_cfg.kind == ObjectiveConfig::Kind::wpc
                     ? build_cpc_objective(tape, fwd.scores)
                     : build_wdm_dual_term(tape, fwd.scores);
      root = tape.sub(base, tape.scale(gp, objective_cfg.penalty_coeff));
    }

    const double objective = tape.val(root)(0, 0);
    const Eigen::MatrixXd& scores = tape.val(fwd.scores);
    const bool bad = !std::isfinite(objective) || !scores.allFinite();
    const double mi = bad ? std::nan("") : cpc_objective(scores) + lnK;

    if (bad) {
      log.diverged = true;
      log.diagnostic = "non-finite objective at step " + std::to_string(step);
      log.records.push_back({step, objective, mi, gp_value, elapsed()});
      break;
    }

    // the penalty term can only lower the contrastive value; a violation
    // means the penalty went negative, which is a bug worth halting on
    if (objective_cfg.kind == ObjectiveConfig::Kind::wpc &&
        objective > (mi - lnK) + 1e-9) {
      log.diverged = true;
      log.diagnostic = "objective ordering violated at step " + std::to_string(step);
      log.records.push_back({step, objective, mi, gp_value, elapsed()});
      break;
    }

    tape.backward(root);
    adam.t += 1;
    bool grad_bad = false;
    for (size_t i = 0; i < params.size(); ++i) {
      const Eigen::MatrixXd& g = tape.grad(gparams.ordered[i]);
      if (g.size() == 0) continue;
      if (!g.allFinite()) {
        grad_bad = true;
        break;
      }
      if (train_cfg.optimizer == TrainConfig::Optimizer::plain_sgd) {
        *params[i] += train_cfg.learning_rate * g;  // ascent
      } else {
        adam.m[i] = 0.9 * adam.m[i] + 0.1 * g;
        adam.v[i] = 0.999 * adam.v[i] + 0.001 * g.cwiseProduct(g);
        double bc1 = 1.0 - std::pow(0.9, adam.t);
        double bc2 = 1.0 - std::pow(0.999, adam.t);
        Eigen::MatrixXd denom = ((adam.v[i] / bc2).cwiseSqrt().array() + 1e-8).matrix();
        *params[i] += train_cfg.learning_rate * (adam.m[i] / bc1).cwiseQuotient(denom);
      }
    }
    if (grad_bad) {
      log.diverged = true;
      log.diagnostic = "non-finite gradient at step " + std::to_string(step);
      log.records.push_back({step, objective, mi, gp_value, elapsed()});
      break;
    }

    if (step == 1 || step % train_cfg.eval_every == 0 || step == train_cfg.steps)
      log.records.push_back({step, objective, mi, gp_value, elapsed()});
  }

  return {std::move(state), std::move(log)};
}

std::vector<SaturationRow> saturation_experiment(
    const std::vector<GlyphDatasetSpec>& mi_levels, const std::vector<int>& k_values,
    const EncoderConfig& encoder_cfg, const TrainConfig& train_cfg, int n_seeds) {
  if (n_seeds < 1) throw std::invalid_argument("saturation_experiment: n_seeds must be >= 1");
  std::vector<SaturationRow> table;
  for (const auto& level : mi_levels) {
    PairDataset ds = generate_glyph_pairs(level);
    for (int K : k_values) {
      ObjectiveConfig obj;
      obj.kind = ObjectiveConfig::Kind::cpc;
      obj.batch_size = K;
      double acc = 0.0;
      for (int s = 0; s < n_seeds; ++s) {
        TrainConfig tc = train_cfg;
        tc.batch_size = K;
        tc.seed = hash_combine(train_cfg.seed, hash_combine(std::uint64_t(K),
                                                            std::uint64_t(s)));
        auto [state, log] = train(ds, encoder_cfg, obj, tc);
        if (log.records.empty() || log.diverged)
          throw std::runtime_error("saturation_experiment: run diverged");
        acc += log.records.back().mi_estimate;
      }
      table.push_back({ds.mi_certificate, K, acc / double(n_seeds)});
    }
  }
  return table;
}

}  // namespace wdm
