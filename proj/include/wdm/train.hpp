#ifndef WDM_TRAIN_HPP
#define WDM_TRAIN_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wdm/dataset.hpp"
#include "wdm/model.hpp"
#include "wdm/objective.hpp"

namespace wdm {

struct TrainConfig {
  enum class Optimizer { plain_sgd, adaptive_moment };

  int steps = 20000;
  int batch_size = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int eval_every = 100;
  Optimizer optimizer = Optimizer::adaptive_moment;

  void validate() const;
};

struct RunLog {
  struct Record {
    int step = 0;
    double objective = 0.0;
    double mi_estimate = 0.0;  // always the contrastive estimate J_cpc + ln K
    double gp = 0.0;
    double wallclock_s = 0.0;
  };
  std::vector<Record> records;
  bool diverged = false;
  std::string diagnostic;

  void write_csv(const std::filesystem::path& path) const;
};

// Gradient ascent on the chosen objective over both encoders (and the coupling
// parameters). encoder_cfg applies to the x side; the y side clones it with
// the dataset's y shape. Batches are sampled with replacement.
std::pair<CriticState, RunLog> train(const PairDataset& dataset,
                                     const EncoderConfig& encoder_cfg,
                                     const ObjectiveConfig& objective_cfg,
                                     const TrainConfig& train_cfg);

// Estimator-saturation table: trains a CPC critic per (MI level, K) cell and
// reports the mean final estimate over seeds. Each level is a glyph spec whose
// certificate fixes the true MI.
struct SaturationRow {
  double true_mi = 0.0;
  int batch_size = 0;
  double mean_final_mi_estimate = 0.0;
};
std::vector<SaturationRow> saturation_experiment(
    const std::vector<GlyphDatasetSpec>& mi_levels, const std::vector<int>& k_values,
    const EncoderConfig& encoder_cfg, const TrainConfig& train_cfg, int n_seeds);

}  // namespace wdm

#endif
