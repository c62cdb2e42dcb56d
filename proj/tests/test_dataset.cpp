#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "wdm/dataset.hpp"
#include "wdm/discrete.hpp"

using namespace wdm;
namespace fs = std::filesystem;

TEST_CASE("render_glyph is deterministic and characters are separated") {
  auto a = render_glyph(0, 3, 16, 32, 0, 0.0);
  auto b = render_glyph(0, 3, 16, 32, 0, 0.0);
  CHECK(a == b);

  auto c = render_glyph(0, 4, 16, 32, 0, 0.0);
  CHECK((a - c).norm() >= 0.5);

  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() <= 1.0);

  CHECK_THROWS_AS(render_glyph(0, 16, 16, 32, 0, 0.0), std::out_of_range);
}

TEST_CASE("jitter is bounded additive noise") {
  auto base = render_glyph(1, 2, 16, 32, 0, 0.0);
  auto j1 = render_glyph(1, 2, 16, 32, 7, 0.1);
  auto j2 = render_glyph(1, 2, 16, 32, 8, 0.1);
  CHECK((j1 - base).cwiseAbs().maxCoeff() <= 0.1 + 1e-12);
  CHECK((j2 - base).cwiseAbs().maxCoeff() <= 0.1 + 1e-12);
  CHECK(j1 != j2);
}

TEST_CASE("mi_of_spec matches the alphabet-size products") {
  GlyphDatasetSpec s;
  s.n_samples = 1;

  s.alphabet_sizes = {55};
  CHECK(mi_of_spec(s) == doctest::Approx(std::log(55.0)).epsilon(1e-12));

  s.alphabet_sizes = {55, 52};
  CHECK(mi_of_spec(s) == doctest::Approx(std::log(2860.0)).epsilon(1e-12));

  s.alphabet_sizes = {55, 52, 48};
  CHECK(mi_of_spec(s) == doctest::Approx(std::log(137280.0)).epsilon(1e-12));

  s.alphabet_sizes = {55, 52, 48, 47, 46, 43, 42, 41, 41};
  CHECK(mi_of_spec(s) == doctest::Approx(34.43).epsilon(1e-3));

  s.alphabet_sizes.clear();
  CHECK_THROWS(generate_glyph_pairs(s));  // empty alphabets rejected
}

TEST_CASE("empty alphabet list has zero MI by convention") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {};
  CHECK(mi_of_spec(s) == 0.0);
}

TEST_CASE("glyph pairs: next-character structure and shapes") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {16};
  s.n_samples = 4;
  s.seed = 3;
  auto ds = generate_glyph_pairs(s);
  CHECK(ds.x_shape == std::array<int, 3>{1, 32, 32});
  CHECK(ds.mi_certificate == doctest::Approx(std::log(16.0)));
  for (int i = 0; i < 4; ++i) {
    auto expect = render_glyph(0, (ds.z(i, 0) + 1) % 16, 16, 32, 0, 0.0);
    Eigen::VectorXd flat(32 * 32);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) flat(r * 32 + c) = expect(r, c);
    CHECK((ds.y.row(i).transpose() - flat).norm() < 1e-12);
  }
}

TEST_CASE("stacked and spatial layouts produce the documented shapes") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {5, 6};
  s.n_samples = 2;
  s.layout = GlyphDatasetSpec::Layout::stacked;
  auto stacked = generate_glyph_pairs(s);
  CHECK(stacked.x_shape == std::array<int, 3>{2, 32, 32});

  s.layout = GlyphDatasetSpec::Layout::spatial;
  s.grid_rows = 1;
  s.grid_cols = 2;
  auto spatial = generate_glyph_pairs(s);
  CHECK(spatial.x_shape == std::array<int, 3>{1, 32, 64});

  s.grid_cols = 3;
  CHECK_THROWS_AS(generate_glyph_pairs(s), std::invalid_argument);
}

TEST_CASE("pairing property: nearest-neighbor decoding of y recovers (z+1) mod l") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {7, 5};
  s.n_samples = 32;
  s.seed = 11;
  s.jitter = 0.05;
  auto ds = generate_glyph_pairs(s);
  const int cp = s.cell_px;
  for (int i = 0; i < s.n_samples; ++i) {
    for (int a = 0; a < 2; ++a) {
      Eigen::VectorXd cell = ds.y.row(i).segment(a * cp * cp, cp * cp);
      int best = -1;
      double best_d = 1e300;
      for (int ch = 0; ch < s.alphabet_sizes[a]; ++ch) {
        auto ref = render_glyph(a, ch, s.alphabet_sizes[a], cp, 0, 0.0);
        Eigen::VectorXd flat(cp * cp);
        for (int r = 0; r < cp; ++r)
          for (int c = 0; c < cp; ++c) flat(r * cp + c) = ref(r, c);
        double d = (cell - flat).norm();
        if (d < best_d) {
          best_d = d;
          best = ch;
        }
      }
      CHECK(best == (ds.z(i, a) + 1) % s.alphabet_sizes[a]);
    }
  }
}

TEST_CASE("latent marginals are uniform within 5 sigma") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {8};
  s.n_samples = 2000;
  s.seed = 21;
  auto ds = generate_glyph_pairs(s);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(8);
  for (int i = 0; i < s.n_samples; ++i) counts(ds.z(i, 0)) += 1;
  const double expect = s.n_samples / 8.0;
  const double sigma = std::sqrt(s.n_samples * (1.0 / 8) * (7.0 / 8));
  for (int c = 0; c < 8; ++c) CHECK(std::abs(counts(c) - expect) <= 5 * sigma);
}

TEST_CASE("MI certificate agrees with the discrete oracle on the latent joint") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {4, 3};
  s.n_samples = 1;
  // deterministic cyclic pairing with uniform latent: mass 1/N on (i, next(i))
  const int N = 12;
  DiscreteJoint j;
  for (int i = 0; i < N; ++i) j.support_x.push_back(Eigen::VectorXd::Constant(1, double(i)));
  j.support_y = j.support_x;
  j.mass = Eigen::MatrixXd::Zero(N, N);
  for (int z0 = 0; z0 < 4; ++z0)
    for (int z1 = 0; z1 < 3; ++z1) {
      int zx = z0 * 3 + z1;
      int zy = ((z0 + 1) % 4) * 3 + (z1 + 1) % 3;
      j.mass(zx, zy) = 1.0 / N;
    }
  CHECK(mi_discrete(j) == doctest::Approx(mi_of_spec(s)).epsilon(1e-12));
}

TEST_CASE("generation is deterministic in (spec, seed)") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {6, 4};
  s.n_samples = 16;
  s.seed = 99;
  s.jitter = 0.1;
  auto a = generate_glyph_pairs(s);
  auto b = generate_glyph_pairs(s);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.z == b.z);

  s.seed = 100;
  auto c = generate_glyph_pairs(s);
  CHECK(a.z != c.z);
}

TEST_CASE("shapes dataset: entropy accounting and determinism") {
  // total latent entropy of the six-factor family
  double total = 0;
  for (int card : ShapesDatasetSpec::factor_cardinalities) total += std::log(double(card));
  CHECK(total == doctest::Approx(std::log(360000.0)).epsilon(1e-12));

  ShapesDatasetSpec s;
  s.n_samples = 8;
  s.seed = 5;
  auto ds = generate_shapes_pairs(s);
  CHECK(ds.mi_certificate == doctest::Approx(std::log(24000.0)).epsilon(1e-12));
  CHECK(ds.x_shape == std::array<int, 3>{3, 32, 32});
  CHECK(ds.z.cols() == 5);
  CHECK(ds.x.minCoeff() >= 0.0);
  CHECK(ds.x.maxCoeff() <= 1.0);

  auto ds2 = generate_shapes_pairs(s);
  CHECK(ds.x == ds2.x);
  CHECK(ds.y == ds2.y);

  // same z rendered at both views: x deterministic, y differs from x
  std::array<int, 5> f{1, 2, 3, 0, 4};
  auto vx = render_shapes_view(f, ShapesDatasetSpec::view_x, 32);
  auto vx2 = render_shapes_view(f, ShapesDatasetSpec::view_x, 32);
  auto vy = render_shapes_view(f, ShapesDatasetSpec::view_y, 32);
  CHECK(vx == vx2);
  CHECK((vx - vy).norm() > 0.5);
}

TEST_CASE("dataset cache round-trips through the archive format") {
  GlyphDatasetSpec s;
  s.alphabet_sizes = {5};
  s.n_samples = 6;
  s.seed = 1;
  auto ds = generate_glyph_pairs(s);
  fs::path p = fs::temp_directory_path() / "wdm_cache_test.bin";
  save_dataset(p, ds, glyph_spec_to_json(s));

  nlohmann::json spec;
  auto loaded = load_dataset(p, &spec);
  CHECK(loaded.x == ds.x);
  CHECK(loaded.y == ds.y);
  CHECK(loaded.z == ds.z);
  CHECK(loaded.mi_certificate == ds.mi_certificate);
  CHECK(spec.at("family") == "glyph");
  CHECK(glyph_spec_from_json(spec).alphabet_sizes == s.alphabet_sizes);
  fs::remove(p);

  CHECK_THROWS(load_dataset(fs::temp_directory_path() / "wdm_no_such_file.bin"));
}

TEST_CASE("omniglot ingestion") {
  fs::path root = fs::temp_directory_path() / "wdm_omniglot_test";
  fs::remove_all(root);

  CHECK_THROWS(load_omniglot(root));  // missing directory

  fs::create_directories(root);
  CHECK_THROWS(load_omniglot(root));  // empty directory

  // single alphabet with 5 characters
  for (int c = 0; c < 5; ++c) {
    fs::path ch = root / "Alpha" / ("character0" + std::to_string(c));
    fs::create_directories(ch);
    std::ofstream(ch / "0001_01.png") << "png";
  }
  auto table = load_omniglot(root);
  REQUIRE(table.size() == 1);
  CHECK(table[0].name == "Alpha");
  CHECK(table[0].n_characters == 5);

  // larger alphabet sorts first
  for (int c = 0; c < 7; ++c)
    fs::create_directories(root / "Beta" / ("character" + std::to_string(c)));
  table = load_omniglot(root);
  REQUIRE(table.size() == 2);
  CHECK(table[0].name == "Beta");
  CHECK(table[0].n_characters == 7);
  fs::remove_all(root);
}
