#ifndef WDM_MODEL_HPP
#define WDM_MODEL_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "wdm/tape.hpp"

namespace wdm {

struct EncoderConfig {
  enum class Arch { mlp, conv };

  Arch arch = Arch::mlp;
  std::array<int, 3> input_shape{};  // {C, H, W}
  // mlp: hidden layer widths; conv: channel progression of the stride-2 blocks
  std::vector<int> hidden;
  int repr_dim = 64;

  int input_dim() const { return input_shape[0] * input_shape[1] * input_shape[2]; }
  void validate() const;

  static EncoderConfig default_mlp(std::array<int, 3> input_shape, int repr_dim = 64);
  static EncoderConfig default_conv(std::array<int, 3> input_shape, int repr_dim = 64);
};

// One weight/bias pair per linear or conv layer, output head last.
// mlp layer i: W (out, in), b (1, out). conv block i: W (Cin*3*3, Cout), b (1, Cout).
struct EncoderParams {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::MatrixXd> b;
};

enum class Side { x_side, y_side };

struct CriticState {
  enum class Coupling { separable_dot, bilinear };

  EncoderConfig config_x, config_y;
  EncoderParams params_x, params_y;
  Coupling coupling = Coupling::separable_dot;
  Eigen::MatrixXd bilinear;  // (d, d), bilinear coupling only

  std::vector<Eigen::MatrixXd*> all_params();
  std::vector<const Eigen::MatrixXd*> all_params() const;
};

EncoderParams init_encoder_params(const EncoderConfig& cfg, std::uint64_t seed);
CriticState init_critic(const EncoderConfig& cfg_x, const EncoderConfig& cfg_y,
                        CriticState::Coupling coupling, std::uint64_t seed);

// Forward graph of one encoder on a batch, with enough structure retained to
// build the gradient w.r.t. the raw inputs as graph ops afterwards.
struct EncoderGraph {
  struct Layer {
    int weight = -1;       // param node
    int post = -1;         // activation output node (tanh), -1 for linear-only
    bool has_tanh = false;
    std::shared_ptr<const ad::LinearPlan> im2col;   // conv only
    std::shared_ptr<const ad::LinearPlan> reshape;  // conv only
  };
  int input = -1;   // (K, D) node
  int output = -1;  // (K, d) node
  std::vector<Layer> layers;
};

EncoderGraph build_encoder_graph(ad::Tape& tape, const EncoderConfig& cfg,
                                 std::vector<int> weight_nodes,
                                 std::vector<int> bias_nodes, int input_node);

// Gradient of sum_i <cotangent_i, output_i> w.r.t. the raw input batch,
// expressed as graph ops (so it stays differentiable w.r.t. parameters).
int build_input_gradient(ad::Tape& tape, const EncoderGraph& graph, int cotangent);

// Registers all critic parameters on a tape; node ids ordered like all_params().
struct CriticGraphParams {
  std::vector<int> wx, bx, wy, by;
  int bilinear = -1;
  std::vector<int> ordered;  // same order as CriticState::all_params()
};
CriticGraphParams register_critic_params(ad::Tape& tape, const CriticState& state);

// Representation of a batch through one side's encoder (plain evaluation).
Eigen::MatrixXd encode(const CriticState& state, Side side, const Eigen::MatrixXd& batch);

// S_ij = <zx_i, zy_j> (separable) or zx_i^T W zy_j (bilinear).
Eigen::MatrixXd score_matrix(const CriticState& state, const Eigen::MatrixXd& zx,
                             const Eigen::MatrixXd& zy);

void save_checkpoint(const std::filesystem::path& path, const CriticState& state);
CriticState load_checkpoint(const std::filesystem::path& path);

}  // namespace wdm

#endif
