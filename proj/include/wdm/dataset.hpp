#ifndef WDM_DATASET_HPP
#define WDM_DATASET_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace wdm {

// Paired observations with per-sample latent labels and an analytically known
// mutual information between x and y.
struct PairDataset {
  Eigen::MatrixXd x;  // (n_samples, C*H*W), pixel values in [0, 1]
  Eigen::MatrixXd y;
  std::array<int, 3> x_shape{};  // {C, H, W}
  std::array<int, 3> y_shape{};
  Eigen::MatrixXi z;  // (n_samples, n_factors)
  double mi_certificate = 0.0;
  std::vector<int> factor_cardinalities;

  int n_samples() const { return static_cast<int>(x.rows()); }
};

struct GlyphDatasetSpec {
  enum class Layout { spatial, stacked };

  Layout layout = Layout::stacked;
  std::vector<int> alphabet_sizes;  // l_i
  int grid_rows = 1, grid_cols = 1;  // spatial: grid_rows * grid_cols == #alphabets
  int cell_px = 32;
  int n_samples = 0;
  std::uint64_t seed = 0;
  double jitter = 0.0;  // additive pixel noise amplitude

  void validate() const;
};

struct ShapesDatasetSpec {
  // object hue, wall hue, floor hue, shape, size, view
  static constexpr std::array<int, 6> factor_cardinalities{10, 10, 10, 4, 6, 15};
  static constexpr int view_x = 0;
  static constexpr int view_y = 14;  // the two extreme camera angles

  int n_samples = 0;
  std::uint64_t seed = 0;
  int image_px = 32;

  void validate() const;
};

// Deterministic synthetic glyph: a stroke/noise pattern fixed by
// (alphabet_id, char_id), optionally perturbed by bounded jitter noise.
Eigen::MatrixXd render_glyph(int alphabet_id, int char_id, int alphabet_size,
                             int cell_px, std::uint64_t jitter_seed, double jitter);

// One 2-D scene of the shapes family; channels-major (C, H, W) flattened row.
Eigen::VectorXd render_shapes_view(const std::array<int, 5>& factors, int view,
                                   int image_px);

PairDataset generate_glyph_pairs(const GlyphDatasetSpec& spec);
PairDataset generate_shapes_pairs(const ShapesDatasetSpec& spec);

double mi_of_spec(const GlyphDatasetSpec& spec);
double mi_of_spec(const ShapesDatasetSpec& spec);

// Dataset cache archive: JSON header + raw arrays in one file.
void save_dataset(const std::filesystem::path& path, const PairDataset& ds,
                  const nlohmann::json& spec_json);
PairDataset load_dataset(const std::filesystem::path& path,
                         nlohmann::json* spec_json = nullptr);

// Optional ingestion of a real Omniglot directory tree
// (alphabet/character/sample.png).
struct OmniglotAlphabet {
  std::string name;
  int n_characters = 0;
  std::vector<int> samples_per_character;
};
std::vector<OmniglotAlphabet> load_omniglot(const std::filesystem::path& directory);

nlohmann::json glyph_spec_to_json(const GlyphDatasetSpec& spec);
GlyphDatasetSpec glyph_spec_from_json(const nlohmann::json& j);
nlohmann::json shapes_spec_to_json(const ShapesDatasetSpec& spec);
ShapesDatasetSpec shapes_spec_from_json(const nlohmann::json& j);

}  // namespace wdm

#endif
