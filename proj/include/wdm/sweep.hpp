#ifndef WDM_SWEEP_HPP
#define WDM_SWEEP_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wdm/dataset.hpp"
#include "wdm/model.hpp"
#include "wdm/objective.hpp"
#include "wdm/train.hpp"

namespace wdm {

struct SweepConfig {
  enum class Axis { n_characters, dataset_size, batch_size };

  GlyphDatasetSpec dataset;  // template; the axis overrides one field per cell
  Axis axis = Axis::n_characters;
  std::vector<int> axis_values;
  std::vector<ObjectiveConfig::Kind> objectives;
  std::vector<std::uint64_t> seeds;
  EncoderConfig::Arch arch = EncoderConfig::Arch::mlp;
  std::vector<int> hidden;  // empty -> architecture default
  int repr_dim = 16;
  TrainConfig train;
  double penalty_coeff = 10.0;
  std::string out_dir = "sweep_out";

  void validate() const;
};

// Throws std::runtime_error with a line-numbered message on parse errors and a
// key-path message on semantic errors.
SweepConfig sweep_config_from_file(const std::filesystem::path& path);
SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json sweep_config_to_json(const SweepConfig& config);

// Resolves the per-cell glyph spec and batch size for one axis value.
GlyphDatasetSpec resolve_cell_spec(const SweepConfig& config, int axis_value);
int resolve_cell_batch(const SweepConfig& config, int axis_value);

// Runs every (axis value, objective, seed) cell, writing results.csv,
// manifest.json and sweep.png under out_dir. Rows appear in deterministic
// order; completed rows survive a mid-sweep failure. Returns a process exit
// code (0 on full success).
int run_sweep(const SweepConfig& config, int n_threads = 0);

// Aggregates sweep CSVs: mean +/- std across seeds per (axis, objective) cell,
// flags cells whose exp(mi_certificate) exceeds the dataset size, writes
// report.md and regenerated plots next to out_path, prints the table.
int report(const std::vector<std::filesystem::path>& csv_paths,
           const std::filesystem::path& out_dir);

}  // namespace wdm

#endif
