#include "wdm/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "wdm/rng.hpp"

namespace wdm {

void EncoderConfig::validate() const {
  if (input_shape[0] <= 0 || input_shape[1] <= 0 || input_shape[2] <= 0)
    throw std::invalid_argument("encoder config: bad input shape");
  if (repr_dim < 1) throw std::invalid_argument("encoder config: repr_dim must be >= 1");
  if (arch == Arch::conv) {
    int h = input_shape[1], w = input_shape[2];
    for (size_t i = 0; i < hidden.size(); ++i) {
      if (h % 2 != 0 || w % 2 != 0)
        throw std::invalid_argument("encoder config: conv input must halve cleanly");
      h /= 2;
      w /= 2;
    }
  }
  for (int width : hidden)
    if (width <= 0) throw std::invalid_argument("encoder config: bad layer width");
}

EncoderConfig EncoderConfig::default_mlp(std::array<int, 3> input_shape, int repr_dim) {
  EncoderConfig c;
  c.arch = Arch::mlp;
  c.input_shape = input_shape;
  c.hidden = {256, 256};
  c.repr_dim = repr_dim;
  return c;
}

EncoderConfig EncoderConfig::default_conv(std::array<int, 3> input_shape, int repr_dim) {
  EncoderConfig c;
  c.arch = Arch::conv;
  c.input_shape = input_shape;
  c.hidden = {16, 32, 64, 64};  // four stride-2 blocks
  c.repr_dim = repr_dim;
  return c;
}

EncoderParams init_encoder_params(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(hash_combine(0x696e6974ULL, seed));
  EncoderParams p;
  auto layer = [&](int rows, int cols, int fan_in, int bias_cols) {
    Eigen::MatrixXd W(rows, cols);
    const double s = 1.0 / std::sqrt(double(fan_in));
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = s * rng.normal();
    p.W.push_back(std::move(W));
    p.b.push_back(Eigen::MatrixXd::Zero(1, bias_cols));
  };

  if (cfg.arch == EncoderConfig::Arch::mlp) {
    int in = cfg.input_dim();
    for (int width : cfg.hidden) {
      layer(width, in, in, width);
      in = width;
    }
    layer(cfg.repr_dim, in, in, cfg.repr_dim);
  } else {
    int c_in = cfg.input_shape[0];
    int h = cfg.input_shape[1], w = cfg.input_shape[2];
    for (int c_out : cfg.hidden) {
      layer(c_in * 9, c_out, c_in * 9, c_out);
      c_in = c_out;
      h /= 2;
      w /= 2;
    }
    int flat = c_in * h * w;
    layer(cfg.repr_dim, flat, flat, cfg.repr_dim);
  }
  return p;
}

CriticState init_critic(const EncoderConfig& cfg_x, const EncoderConfig& cfg_y,
                        CriticState::Coupling coupling, std::uint64_t seed) {
  CriticState s;
  s.config_x = cfg_x;
  s.config_y = cfg_y;
  s.params_x = init_encoder_params(cfg_x, hash_combine(seed, 1));
  s.params_y = init_encoder_params(cfg_y, hash_combine(seed, 2));
  s.coupling = coupling;
  if (coupling == CriticState::Coupling::bilinear) {
    if (cfg_x.repr_dim != cfg_y.repr_dim)
      throw std::invalid_argument("bilinear coupling needs equal repr dims");
    Rng rng(hash_combine(seed, 3));
    s.bilinear.resize(cfg_x.repr_dim, cfg_y.repr_dim);
    const double sc = 1.0 / std::sqrt(double(cfg_x.repr_dim));
    for (Eigen::Index i = 0; i < s.bilinear.size(); ++i)
      s.bilinear.data()[i] = sc * rng.normal();
  }
  return s;
}

std::vector<Eigen::MatrixXd*> CriticState::all_params() {
  std::vector<Eigen::MatrixXd*> out;
  for (auto& m : params_x.W) out.push_back(&m);
  for (auto& m : params_x.b) out.push_back(&m);
  for (auto& m : params_y.W) out.push_back(&m);
  for (auto& m : params_y.b) out.push_back(&m);
  if (coupling == Coupling::bilinear) out.push_back(&bilinear);
  return out;
}

std::vector<const Eigen::MatrixXd*> CriticState::all_params() const {
  auto mut = const_cast<CriticState*>(this)->all_params();
  return {mut.begin(), mut.end()};
}

namespace {

std::shared_ptr<const ad::LinearPlan> make_im2col_plan(int K, int C, int H, int W) {
  // 3x3 kernel, stride 2, pad 1
  const int oH = H / 2, oW = W / 2, P = oH * oW;
  auto plan = std::make_shared<ad::LinearPlan>();
  plan->in_rows = K;
  plan->in_cols = C * H * W;
  plan->out_rows = K * P;
  plan->out_cols = C * 9;
  plan->src.resize(size_t(plan->out_rows) * plan->out_cols);
  for (int k = 0; k < K; ++k) {
    for (int p = 0; p < P; ++p) {
      const int oy = p / oW, ox = p % oW;
      const int row = k * P + p;
      for (int c = 0; c < C; ++c) {
        for (int dy = 0; dy < 3; ++dy) {
          for (int dx = 0; dx < 3; ++dx) {
            const int iy = oy * 2 - 1 + dy, ix = ox * 2 - 1 + dx;
            const int col = c * 9 + dy * 3 + dx;
            int src = -1;
            if (iy >= 0 && iy < H && ix >= 0 && ix < W)
              src = k * plan->in_cols + c * H * W + iy * W + ix;
            plan->src[size_t(row) * plan->out_cols + col] = src;
          }
        }
      }
    }
  }
  return plan;
}

std::shared_ptr<const ad::LinearPlan> make_channel_reshape_plan(int K, int P, int C_out) {
  // (K*P, C_out) -> (K, C_out*P), channel-major rows
  auto plan = std::make_shared<ad::LinearPlan>();
  plan->in_rows = K * P;
  plan->in_cols = C_out;
  plan->out_rows = K;
  plan->out_cols = C_out * P;
  plan->src.resize(size_t(K) * C_out * P);
  for (int k = 0; k < K; ++k)
    for (int c = 0; c < C_out; ++c)
      for (int p = 0; p < P; ++p)
        plan->src[size_t(k) * (C_out * P) + c * P + p] = (k * P + p) * C_out + c;
  return plan;
}

}  // namespace

EncoderGraph build_encoder_graph(ad::Tape& tape, const EncoderConfig& cfg,
                                 std::vector<int> weight_nodes,
                                 std::vector<int> bias_nodes, int input_node) {
  const int K = static_cast<int>(tape.val(input_node).rows());
  if (tape.val(input_node).cols() != cfg.input_dim())
    throw std::invalid_argument("encoder: batch shape does not match config");

  EncoderGraph g;
  g.input = input_node;
  int h = input_node;

  if (cfg.arch == EncoderConfig::Arch::mlp) {
    for (size_t i = 0; i < cfg.hidden.size(); ++i) {
      int a = tape.add_rowvec(tape.matmul_nt(h, weight_nodes[i]), bias_nodes[i]);
      h = tape.tanh_(a);
      g.layers.push_back({weight_nodes[i], h, true, nullptr, nullptr});
    }
  } else {
    int C = cfg.input_shape[0], H = cfg.input_shape[1], W = cfg.input_shape[2];
    for (size_t i = 0; i < cfg.hidden.size(); ++i) {
      const int C_out = cfg.hidden[i];
      auto im2col = make_im2col_plan(K, C, H, W);
      auto reshape = make_channel_reshape_plan(K, (H / 2) * (W / 2), C_out);
      int cols = tape.linmap(h, im2col);
      int conv = tape.add_rowvec(tape.matmul(cols, weight_nodes[i]), bias_nodes[i]);
      h = tape.tanh_(tape.linmap(conv, reshape));
      g.layers.push_back({weight_nodes[i], h, true, im2col, reshape});
      C = C_out;
      H /= 2;
      W /= 2;
    }
  }
  const size_t head = cfg.hidden.size();
  g.output = tape.add_rowvec(tape.matmul_nt(h, weight_nodes[head]), bias_nodes[head]);
  g.layers.push_back({weight_nodes[head], -1, false, nullptr, nullptr});
  return g;
}

int build_input_gradient(ad::Tape& tape, const EncoderGraph& graph, int cotangent) {
  int d = cotangent;
  for (auto it = graph.layers.rbegin(); it != graph.layers.rend(); ++it) {
    const auto& layer = *it;
    if (layer.has_tanh) {
      // d_pre = d_post * (1 - tanh^2)
      int one_minus_sq = tape.add_scalar(tape.scale(tape.square(layer.post), -1.0), 1.0);
      d = tape.cmul(d, one_minus_sq);
    }
    if (layer.im2col) {
      int d_conv = tape.linmap(d, layer.reshape, /*transposed=*/true);
      int d_cols = tape.matmul_nt(d_conv, layer.weight);
      d = tape.linmap(d_cols, layer.im2col, /*transposed=*/true);
    } else {
      d = tape.matmul(d, layer.weight);
    }
  }
  return d;
}

CriticGraphParams register_critic_params(ad::Tape& tape, const CriticState& state) {
  CriticGraphParams g;
  for (const auto& m : state.params_x.W) g.wx.push_back(tape.param(m));
  for (const auto& m : state.params_x.b) g.bx.push_back(tape.param(m));
  for (const auto& m : state.params_y.W) g.wy.push_back(tape.param(m));
  for (const auto& m : state.params_y.b) g.by.push_back(tape.param(m));
  if (state.coupling == CriticState::Coupling::bilinear)
    g.bilinear = tape.param(state.bilinear);
  for (auto& v : {g.wx, g.bx, g.wy, g.by})
    g.ordered.insert(g.ordered.end(), v.begin(), v.end());
  if (g.bilinear >= 0) g.ordered.push_back(g.bilinear);
  return g;
}

Eigen::MatrixXd encode(const CriticState& state, Side side, const Eigen::MatrixXd& batch) {
  const EncoderConfig& cfg = (side == Side::x_side) ? state.config_x : state.config_y;
  const EncoderParams& par = (side == Side::x_side) ? state.params_x : state.params_y;
  ad::Tape tape;
  std::vector<int> w, b;
  for (const auto& m : par.W) w.push_back(tape.constant(m));
  for (const auto& m : par.b) b.push_back(tape.constant(m));
  auto g = build_encoder_graph(tape, cfg, w, b, tape.constant(batch));
  return tape.val(g.output);
}

Eigen::MatrixXd score_matrix(const CriticState& state, const Eigen::MatrixXd& zx,
                             const Eigen::MatrixXd& zy) {
  if (zx.cols() != zy.cols() &&
      state.coupling == CriticState::Coupling::separable_dot)
    throw std::invalid_argument("score_matrix: representation dims differ");
  if (state.coupling == CriticState::Coupling::separable_dot)
    return zx * zy.transpose();
  return zx * state.bilinear * zy.transpose();
}

namespace {

constexpr char kCkptMagic[8] = {'W', 'D', 'M', 'C', 'K', 'P', 'T', '1'};

nlohmann::json config_to_json(const EncoderConfig& c) {
  return {{"arch", c.arch == EncoderConfig::Arch::mlp ? "mlp" : "conv"},
          {"input_shape", c.input_shape},
          {"hidden", c.hidden},
          {"repr_dim", c.repr_dim}};
}

EncoderConfig config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.arch = (j.at("arch") == "mlp") ? EncoderConfig::Arch::mlp : EncoderConfig::Arch::conv;
  c.input_shape = j.at("input_shape");
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.repr_dim = j.at("repr_dim");
  return c;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  std::int64_t r = m.rows(), c = m.cols();
  os.write(reinterpret_cast<const char*>(&r), 8);
  os.write(reinterpret_cast<const char*>(&c), 8);
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Eigen::MatrixXd read_matrix(std::istream& is) {
  std::int64_t r = 0, c = 0;
  is.read(reinterpret_cast<char*>(&r), 8);
  is.read(reinterpret_cast<char*>(&c), 8);
  Eigen::MatrixXd m(r, c);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CriticState& state) {
  nlohmann::json header{
      {"config_x", config_to_json(state.config_x)},
      {"config_y", config_to_json(state.config_y)},
      {"coupling",
       state.coupling == CriticState::Coupling::separable_dot ? "separable_dot" : "bilinear"},
      {"n_wx", state.params_x.W.size()},
      {"n_wy", state.params_y.W.size()}};
  std::string hs = header.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
  os.write(kCkptMagic, 8);
  std::uint64_t hl = hs.size();
  os.write(reinterpret_cast<const char*>(&hl), 8);
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto* m : state.all_params()) write_matrix(os, *m);
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

CriticState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  std::uint64_t hl = 0;
  is.read(reinterpret_cast<char*>(&hl), 8);
  std::string hs(hl, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(hl));
  nlohmann::json header = nlohmann::json::parse(hs);

  CriticState s;
  s.config_x = config_from_json(header.at("config_x"));
  s.config_y = config_from_json(header.at("config_y"));
  s.coupling = (header.at("coupling") == "bilinear") ? CriticState::Coupling::bilinear
                                                     : CriticState::Coupling::separable_dot;
  const size_t nwx = header.at("n_wx"), nwy = header.at("n_wy");
  for (size_t i = 0; i < nwx; ++i) s.params_x.W.push_back(read_matrix(is));
  for (size_t i = 0; i < nwx; ++i) s.params_x.b.push_back(read_matrix(is));
  for (size_t i = 0; i < nwy; ++i) s.params_y.W.push_back(read_matrix(is));
  for (size_t i = 0; i < nwy; ++i) s.params_y.b.push_back(read_matrix(is));
  if (s.coupling == CriticState::Coupling::bilinear) s.bilinear = read_matrix(is);
  return s;
}

}  // namespace wdm
