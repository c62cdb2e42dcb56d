#include "wdm/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wdm {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back((v >> 24) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const std::vector<unsigned char>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, crc);
}

// 5x7 glyphs for the characters the plots need; each byte is one row, low 5 bits
struct FontGlyph {
  char c;
  unsigned char rows[7];
};
const FontGlyph kFont[] = {
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
    {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'B', {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e}},
    {'C', {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e}},
    {'D', {0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c}},
    {'E', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f}},
    {'F', {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10}},
    {'G', {0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f}},
    {'H', {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
    {'I', {0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
    {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
    {'Q', {0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d}},
    {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
    {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
    {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1b, 0x11}},
    {'X', {0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f}},
};

const unsigned char* glyph_rows(char c) {
  c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont)
    if (g.c == c) return g.rows;
  return nullptr;
}

struct Canvas {
  int w, h;
  std::vector<unsigned char> rgb;

  Canvas(int w_, int h_) : w(w_), h(h_), rgb(size_t(w_) * h_ * 3, 255) {}

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    size_t i = (size_t(y) * w + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }

  void blend(int x, int y, unsigned char r, unsigned char g, unsigned char b, double a) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    size_t i = (size_t(y) * w + x) * 3;
    rgb[i] = static_cast<unsigned char>(rgb[i] * (1 - a) + r * a);
    rgb[i + 1] = static_cast<unsigned char>(rgb[i + 1] * (1 - a) + g * a);
    rgb[i + 2] = static_cast<unsigned char>(rgb[i + 2] * (1 - a) + b * a);
  }

  void line(double x0, double y0, double x1, double y1, unsigned char r, unsigned char g,
            unsigned char b) {
    double dx = x1 - x0, dy = y1 - y0;
    int n = static_cast<int>(std::max(std::abs(dx), std::abs(dy))) + 1;
    for (int i = 0; i <= n; ++i) {
      double t = double(i) / n;
      int px = static_cast<int>(std::lround(x0 + t * dx));
      int py = static_cast<int>(std::lround(y0 + t * dy));
      // thicken to 2px for visibility
      set(px, py, r, g, b);
      set(px, py + 1, r, g, b);
    }
  }

  void text(int x, int y, const std::string& s, unsigned char r, unsigned char g,
            unsigned char b) {
    for (char c : s) {
      const unsigned char* rows = glyph_rows(c);
      if (rows)
        for (int ry = 0; ry < 7; ++ry)
          for (int rx = 0; rx < 5; ++rx)
            if (rows[ry] & (1 << (4 - rx))) set(x + rx, y + ry, r, g, b);
      x += 6;
    }
  }
};

struct Rgb {
  unsigned char r, g, b;
};
const Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189}};

std::string format_tick(double v) {
  char buf[32];
  if (v != 0 && (std::abs(v) >= 10000 || std::abs(v) < 0.01))
    std::snprintf(buf, sizeof buf, "%.1e", v);
  else
    std::snprintf(buf, sizeof buf, "%g", std::round(v * 1000) / 1000);
  return buf;
}

}  // namespace

void write_png(const std::filesystem::path& path, int width, int height,
               const std::vector<unsigned char>& rgb) {
  if (width <= 0 || height <= 0 || rgb.size() != size_t(width) * height * 3)
    throw std::invalid_argument("write_png: buffer does not match dimensions");

  // filter byte 0 in front of every scanline
  std::vector<unsigned char> raw;
  raw.reserve(size_t(height) * (size_t(width) * 3 + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), rgb.begin() + size_t(y) * width * 3,
               rgb.begin() + size_t(y + 1) * width * 3);
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 9) !=
      Z_OK)
    throw std::runtime_error("write_png: deflate failed");
  comp.resize(comp_size);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_png: cannot open " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), out.size());
  if (!os) throw std::runtime_error("write_png: write failed for " + path.string());
}

void write_line_plot(const std::filesystem::path& path, const std::vector<double>& x,
                     const std::vector<PlotSeries>& series, const std::string& x_label,
                     const std::string& y_label, int width, int height) {
  if (x.empty() || series.empty()) throw std::invalid_argument("write_line_plot: empty plot");
  for (const auto& s : series)
    if (s.mean.size() != x.size() || s.lo.size() != x.size() || s.hi.size() != x.size())
      throw std::invalid_argument("write_line_plot: series length mismatch");

  double xmin = *std::min_element(x.begin(), x.end());
  double xmax = *std::max_element(x.begin(), x.end());
  double ymin = series[0].lo[0], ymax = series[0].hi[0];
  for (const auto& s : series)
    for (size_t i = 0; i < x.size(); ++i) {
      ymin = std::min(ymin, s.lo[i]);
      ymax = std::max(ymax, s.hi[i]);
    }
  if (xmax == xmin) xmax = xmin + 1;
  double pad = (ymax - ymin) * 0.08 + 1e-9;
  ymin -= pad;
  ymax += pad;

  const int ml = 64, mr = 16, mt = 16, mb = 44;  // margins
  Canvas cv(width, height);
  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double v) {
    return (height - mb) - (v - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  // axes and ticks
  cv.line(ml, mt, ml, height - mb, 0, 0, 0);
  cv.line(ml, height - mb, width - mr, height - mb, 0, 0, 0);
  for (int t = 0; t <= 4; ++t) {
    double yv = ymin + (ymax - ymin) * t / 4.0;
    int y = static_cast<int>(py(yv));
    cv.line(ml - 4, y, ml, y, 0, 0, 0);
    cv.text(4, y - 3, format_tick(yv), 0, 0, 0);
    double xv = xmin + (xmax - xmin) * t / 4.0;
    int xp = static_cast<int>(px(xv));
    cv.line(xp, height - mb, xp, height - mb + 4, 0, 0, 0);
    cv.text(xp - 8, height - mb + 8, format_tick(xv), 0, 0, 0);
  }
  cv.text(ml + (width - ml - mr) / 2 - 3 * static_cast<int>(x_label.size()),
          height - 14, x_label, 0, 0, 0);
  cv.text(4, 4, y_label, 0, 0, 0);

  for (size_t si = 0; si < series.size(); ++si) {
    const Rgb c = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    // band between lo and hi
    for (size_t i = 0; i + 1 < x.size(); ++i) {
      int x0 = static_cast<int>(px(x[i])), x1 = static_cast<int>(px(x[i + 1]));
      for (int xp = std::min(x0, x1); xp <= std::max(x0, x1); ++xp) {
        double t = x1 == x0 ? 0.0 : double(xp - x0) / (x1 - x0);
        double lo = series[si].lo[i] + t * (series[si].lo[i + 1] - series[si].lo[i]);
        double hi = series[si].hi[i] + t * (series[si].hi[i + 1] - series[si].hi[i]);
        for (int yp = static_cast<int>(py(hi)); yp <= static_cast<int>(py(lo)); ++yp)
          cv.blend(xp, yp, c.r, c.g, c.b, 0.18);
      }
    }
    for (size_t i = 0; i + 1 < x.size(); ++i)
      cv.line(px(x[i]), py(series[si].mean[i]), px(x[i + 1]), py(series[si].mean[i + 1]),
              c.r, c.g, c.b);
    // legend entry
    int ly = mt + 6 + static_cast<int>(si) * 14;
    cv.line(width - mr - 96, ly + 3, width - mr - 76, ly + 3, c.r, c.g, c.b);
    cv.text(width - mr - 70, ly, series[si].label, 0, 0, 0);
  }

  write_png(path, width, height, cv.rgb);
}

}  // namespace wdm
