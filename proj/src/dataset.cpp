#include "wdm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "wdm/rng.hpp"

namespace wdm {

namespace {

constexpr char kMagic[8] = {'W', 'D', 'M', 'D', 'A', 'T', 'A', '1'};

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// distance from pixel to segment [a, b]
double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  double vx = bx - ax, vy = by - ay;
  double len2 = vx * vx + vy * vy;
  double t = (len2 > 0) ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::min(1.0, std::max(0.0, t));
  double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

void GlyphDatasetSpec::validate() const {
  if (alphabet_sizes.empty())
    throw std::invalid_argument("glyph spec: no alphabets");
  for (int l : alphabet_sizes)
    if (l <= 0) throw std::invalid_argument("glyph spec: alphabet size must be positive");
  if (layout == Layout::spatial &&
      grid_rows * grid_cols != static_cast<int>(alphabet_sizes.size()))
    throw std::invalid_argument("glyph spec: grid does not match alphabet count");
  if (cell_px <= 0) throw std::invalid_argument("glyph spec: cell_px must be positive");
  if (n_samples <= 0) throw std::invalid_argument("glyph spec: n_samples must be positive");
  if (jitter < 0) throw std::invalid_argument("glyph spec: jitter must be nonnegative");
}

void ShapesDatasetSpec::validate() const {
  if (n_samples <= 0) throw std::invalid_argument("shapes spec: n_samples must be positive");
  if (image_px <= 0) throw std::invalid_argument("shapes spec: image_px must be positive");
}

Eigen::MatrixXd render_glyph(int alphabet_id, int char_id, int alphabet_size,
                             int cell_px, std::uint64_t jitter_seed, double jitter) {
  if (char_id < 0 || char_id >= alphabet_size)
    throw std::out_of_range("render_glyph: char_id out of range");

  Rng rng(hash_combine(0x676c797068ULL, hash_combine(std::uint64_t(alphabet_id) + 1,
                                                     std::uint64_t(char_id) * 0x10001ULL)));
  Eigen::MatrixXd img(cell_px, cell_px);
  // low-amplitude per-character noise field keeps distinct characters apart
  // even when their strokes overlap
  for (int r = 0; r < cell_px; ++r)
    for (int c = 0; c < cell_px; ++c) img(r, c) = 0.15 * rng.uniform();

  const int n_strokes = 5 + static_cast<int>(rng.uniform_int(3));
  const double lo = 0.1 * cell_px, hi = 0.9 * cell_px;
  for (int s = 0; s < n_strokes; ++s) {
    double ax = rng.uniform(lo, hi), ay = rng.uniform(lo, hi);
    double bx = rng.uniform(lo, hi), by = rng.uniform(lo, hi);
    double width = rng.uniform(0.8, 1.8);
    double intensity = rng.uniform(0.7, 1.0);
    for (int r = 0; r < cell_px; ++r) {
      for (int c = 0; c < cell_px; ++c) {
        double d = segment_distance(c + 0.5, r + 0.5, ax, ay, bx, by);
        if (d < width + 1.0) {
          double v = intensity * clamp01(width + 1.0 - d);
          img(r, c) = std::max(img(r, c), v);
        }
      }
    }
  }

  if (jitter > 0.0) {
    Rng jrng(hash_combine(0x6a69747465ULL, jitter_seed));
    for (int r = 0; r < cell_px; ++r)
      for (int c = 0; c < cell_px; ++c)
        img(r, c) = clamp01(img(r, c) + jrng.uniform(-jitter, jitter));
  } else {
    for (int r = 0; r < cell_px; ++r)
      for (int c = 0; c < cell_px; ++c) img(r, c) = clamp01(img(r, c));
  }
  return img;
}

double mi_of_spec(const GlyphDatasetSpec& spec) {
  double mi = 0.0;
  for (int l : spec.alphabet_sizes) mi += std::log(double(l));
  return mi;
}

double mi_of_spec(const ShapesDatasetSpec&) {
  double mi = 0.0;
  for (int i = 0; i < 5; ++i)  // the five shared factors
    mi += std::log(double(ShapesDatasetSpec::factor_cardinalities[i]));
  return mi;
}

PairDataset generate_glyph_pairs(const GlyphDatasetSpec& spec) {
  spec.validate();
  const int k = static_cast<int>(spec.alphabet_sizes.size());
  const int cp = spec.cell_px;

  PairDataset ds;
  if (spec.layout == GlyphDatasetSpec::Layout::spatial) {
    ds.x_shape = {1, spec.grid_rows * cp, spec.grid_cols * cp};
  } else {
    ds.x_shape = {k, cp, cp};
  }
  ds.y_shape = ds.x_shape;
  const int dim = ds.x_shape[0] * ds.x_shape[1] * ds.x_shape[2];
  ds.x.resize(spec.n_samples, dim);
  ds.y.resize(spec.n_samples, dim);
  ds.z.resize(spec.n_samples, k);
  ds.factor_cardinalities = spec.alphabet_sizes;
  ds.mi_certificate = mi_of_spec(spec);

  Rng rng(spec.seed);
  auto place = [&](Eigen::MatrixXd& out, int sample, int cell, const Eigen::MatrixXd& img) {
    if (spec.layout == GlyphDatasetSpec::Layout::spatial) {
      const int gr = cell / spec.grid_cols, gc = cell % spec.grid_cols;
      const int W = ds.x_shape[2];
      for (int r = 0; r < cp; ++r)
        for (int c = 0; c < cp; ++c)
          out(sample, (gr * cp + r) * W + gc * cp + c) = img(r, c);
    } else {
      for (int r = 0; r < cp; ++r)
        for (int c = 0; c < cp; ++c) out(sample, cell * cp * cp + r * cp + c) = img(r, c);
    }
  };

  for (int s = 0; s < spec.n_samples; ++s) {
    for (int i = 0; i < k; ++i) {
      const int l = spec.alphabet_sizes[i];
      const int zi = static_cast<int>(rng.uniform_int(std::uint64_t(l)));
      ds.z(s, i) = zi;
      const std::uint64_t base =
          hash_combine(spec.seed, std::uint64_t(s) * 131071ULL + std::uint64_t(i));
      place(ds.x, s, i, render_glyph(i, zi, l, cp, hash_combine(base, 0), spec.jitter));
      place(ds.y, s, i,
            render_glyph(i, (zi + 1) % l, l, cp, hash_combine(base, 1), spec.jitter));
    }
  }
  return ds;
}

namespace {

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  double i = std::floor(h * 6.0);
  double f = h * 6.0 - i;
  double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

}  // namespace

Eigen::VectorXd render_shapes_view(const std::array<int, 5>& factors, int view,
                                   int image_px) {
  const int px = image_px;
  const auto [object_hue, wall_hue, floor_hue, shape, size] = factors;
  const auto& card = ShapesDatasetSpec::factor_cardinalities;
  if (object_hue < 0 || object_hue >= card[0] || wall_hue < 0 || wall_hue >= card[1] ||
      floor_hue < 0 || floor_hue >= card[2] || shape < 0 || shape >= card[3] ||
      size < 0 || size >= card[4] || view < 0 || view >= card[5])
    throw std::out_of_range("render_shapes_view: factor out of range");

  auto obj = hsv_to_rgb(object_hue / 10.0, 0.85, 0.95);
  auto wall = hsv_to_rgb(wall_hue / 10.0 + 0.033, 0.55, 0.65);
  auto floor = hsv_to_rgb(floor_hue / 10.0 + 0.067, 0.6, 0.8);

  // view acts as a horizontal camera shift plus a slight horizon tilt
  const double vt = view / double(card[5] - 1) - 0.5;  // [-0.5, 0.5]
  const double shift = vt * 0.45 * px;
  const double horizon = 0.55 * px + vt * 0.12 * px;

  const double cx = 0.5 * px - shift;
  const double cy = 0.58 * px;
  const double radius = px * (0.10 + 0.035 * size);

  Eigen::VectorXd out(3 * px * px);
  for (int r = 0; r < px; ++r) {
    for (int c = 0; c < px; ++c) {
      const auto& bg = (r < horizon) ? wall : floor;
      double dx = c + 0.5 - cx, dy = r + 0.5 - cy;
      bool inside = false;
      switch (shape) {
        case 0: inside = dx * dx + dy * dy <= radius * radius; break;            // circle
        case 1: inside = std::max(std::abs(dx), std::abs(dy)) <= radius; break;  // square
        case 2: inside = std::abs(dx) + std::abs(dy) <= radius * 1.2; break;     // diamond
        default:  // triangle
          inside = dy >= -radius && dy <= radius &&
                   std::abs(dx) <= (dy + radius) * 0.6;
          break;
      }
      const auto& col = inside ? obj : bg;
      for (int ch = 0; ch < 3; ++ch) out(ch * px * px + r * px + c) = clamp01(col[ch]);
    }
  }
  return out;
}

PairDataset generate_shapes_pairs(const ShapesDatasetSpec& spec) {
  spec.validate();
  const int px = spec.image_px;
  PairDataset ds;
  ds.x_shape = ds.y_shape = {3, px, px};
  const int dim = 3 * px * px;
  ds.x.resize(spec.n_samples, dim);
  ds.y.resize(spec.n_samples, dim);
  ds.z.resize(spec.n_samples, 5);
  ds.factor_cardinalities.assign(ShapesDatasetSpec::factor_cardinalities.begin(),
                                 ShapesDatasetSpec::factor_cardinalities.begin() + 5);
  ds.mi_certificate = mi_of_spec(spec);

  Rng rng(spec.seed);
  for (int s = 0; s < spec.n_samples; ++s) {
    std::array<int, 5> f{};
    for (int i = 0; i < 5; ++i) {
      f[i] = static_cast<int>(rng.uniform_int(ShapesDatasetSpec::factor_cardinalities[i]));
      ds.z(s, i) = f[i];
    }
    ds.x.row(s) = render_shapes_view(f, ShapesDatasetSpec::view_x, px).transpose();
    ds.y.row(s) = render_shapes_view(f, ShapesDatasetSpec::view_y, px).transpose();
  }
  return ds;
}

nlohmann::json glyph_spec_to_json(const GlyphDatasetSpec& spec) {
  return nlohmann::json{
      {"family", "glyph"},
      {"layout", spec.layout == GlyphDatasetSpec::Layout::spatial ? "spatial" : "stacked"},
      {"alphabet_sizes", spec.alphabet_sizes},
      {"grid", {spec.grid_rows, spec.grid_cols}},
      {"cell_px", spec.cell_px},
      {"n_samples", spec.n_samples},
      {"seed", spec.seed},
      {"jitter", spec.jitter}};
}

GlyphDatasetSpec glyph_spec_from_json(const nlohmann::json& j) {
  GlyphDatasetSpec s;
  const std::string layout = j.value("layout", "stacked");
  if (layout == "spatial")
    s.layout = GlyphDatasetSpec::Layout::spatial;
  else if (layout == "stacked")
    s.layout = GlyphDatasetSpec::Layout::stacked;
  else
    throw std::invalid_argument("glyph spec: unknown layout '" + layout + "'");
  s.alphabet_sizes = j.at("alphabet_sizes").get<std::vector<int>>();
  if (j.contains("grid")) {
    s.grid_rows = j["grid"][0];
    s.grid_cols = j["grid"][1];
  } else {
    s.grid_rows = 1;
    s.grid_cols = static_cast<int>(s.alphabet_sizes.size());
  }
  s.cell_px = j.value("cell_px", 32);
  s.n_samples = j.at("n_samples");
  s.seed = j.value("seed", 0);
  s.jitter = j.value("jitter", 0.0);
  s.validate();
  return s;
}

nlohmann::json shapes_spec_to_json(const ShapesDatasetSpec& spec) {
  return nlohmann::json{{"family", "shapes"},
                        {"n_samples", spec.n_samples},
                        {"seed", spec.seed},
                        {"image_px", spec.image_px}};
}

ShapesDatasetSpec shapes_spec_from_json(const nlohmann::json& j) {
  ShapesDatasetSpec s;
  s.n_samples = j.at("n_samples");
  s.seed = j.value("seed", 0);
  s.image_px = j.value("image_px", 32);
  s.validate();
  return s;
}

namespace {

template <typename T>
void write_raw(std::ostream& os, const T* data, size_t count) {
  os.write(reinterpret_cast<const char*>(data), count * sizeof(T));
}

template <typename T>
void read_raw(std::istream& is, T* data, size_t count) {
  is.read(reinterpret_cast<char*>(data), count * sizeof(T));
  if (!is) throw std::runtime_error("dataset cache: truncated file");
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const PairDataset& ds,
                  const nlohmann::json& spec_json) {
  nlohmann::json header{{"format_version", 1},
                        {"spec", spec_json},
                        {"seed", spec_json.value("seed", 0)},
                        {"mi_certificate", ds.mi_certificate},
                        {"n_samples", ds.n_samples()},
                        {"x_shape", ds.x_shape},
                        {"y_shape", ds.y_shape},
                        {"factor_cardinalities", ds.factor_cardinalities}};
  std::string hs = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dataset cache: cannot open " + path.string());
  os.write(kMagic, 8);
  std::uint64_t hl = hs.size();
  write_raw(os, &hl, 1);
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  write_raw(os, ds.x.data(), static_cast<size_t>(ds.x.size()));
  write_raw(os, ds.y.data(), static_cast<size_t>(ds.y.size()));
  std::vector<std::int32_t> zbuf(ds.z.size());
  for (Eigen::Index i = 0; i < ds.z.size(); ++i)
    zbuf[static_cast<size_t>(i)] = ds.z.data()[i];
  write_raw(os, zbuf.data(), zbuf.size());
  if (!os) throw std::runtime_error("dataset cache: write failed for " + path.string());
}

PairDataset load_dataset(const std::filesystem::path& path, nlohmann::json* spec_json) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dataset cache: cannot open " + path.string());
  char magic[8];
  read_raw(is, magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("dataset cache: bad magic in " + path.string());
  std::uint64_t hl = 0;
  read_raw(is, &hl, 1);
  std::string hs(hl, '\0');
  read_raw(is, hs.data(), hl);
  nlohmann::json header = nlohmann::json::parse(hs);
  if (header.at("format_version") != 1)
    throw std::runtime_error("dataset cache: unsupported format_version");

  PairDataset ds;
  ds.mi_certificate = header.at("mi_certificate");
  ds.x_shape = header.at("x_shape");
  ds.y_shape = header.at("y_shape");
  ds.factor_cardinalities = header.at("factor_cardinalities").get<std::vector<int>>();
  const int n = header.at("n_samples");
  const int xd = ds.x_shape[0] * ds.x_shape[1] * ds.x_shape[2];
  const int yd = ds.y_shape[0] * ds.y_shape[1] * ds.y_shape[2];
  const int nf = static_cast<int>(ds.factor_cardinalities.size());
  ds.x.resize(n, xd);
  ds.y.resize(n, yd);
  ds.z.resize(n, nf);
  read_raw(is, ds.x.data(), static_cast<size_t>(ds.x.size()));
  read_raw(is, ds.y.data(), static_cast<size_t>(ds.y.size()));
  std::vector<std::int32_t> zbuf(static_cast<size_t>(n) * nf);
  read_raw(is, zbuf.data(), zbuf.size());
  for (Eigen::Index i = 0; i < ds.z.size(); ++i)
    ds.z.data()[i] = zbuf[static_cast<size_t>(i)];
  if (spec_json) *spec_json = header.at("spec");
  return ds;
}

std::vector<OmniglotAlphabet> load_omniglot(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory))
    throw std::runtime_error("omniglot ingestion: no such directory: " + directory.string());

  std::vector<OmniglotAlphabet> out;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_directory()) continue;
    OmniglotAlphabet alph;
    alph.name = entry.path().filename().string();
    bool malformed = false;
    for (const auto& ch : fs::directory_iterator(entry.path())) {
      if (!ch.is_directory()) {
        malformed = true;
        continue;
      }
      int samples = 0;
      for (const auto& f : fs::directory_iterator(ch.path()))
        if (f.is_regular_file()) ++samples;
      alph.samples_per_character.push_back(samples);
      ++alph.n_characters;
    }
    if (alph.n_characters == 0) {
      std::cerr << "omniglot ingestion: skipping " << alph.name
                << " (no character directories)\n";
      continue;
    }
    if (malformed)
      std::cerr << "omniglot ingestion: stray files under alphabet " << alph.name << "\n";
    out.push_back(std::move(alph));
  }
  if (out.empty())
    throw std::runtime_error("omniglot ingestion: no alphabets found under " +
                             directory.string());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.n_characters != b.n_characters) return a.n_characters > b.n_characters;
    return a.name < b.name;
  });
  return out;
}

}  // namespace wdm
