#ifndef WDM_PLOT_HPP
#define WDM_PLOT_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace wdm {

// 8-bit RGB, row-major, 3 bytes per pixel.
void write_png(const std::filesystem::path& path, int width, int height,
               const std::vector<unsigned char>& rgb);

// One plotted line with a min-max band (e.g. across seeds).
struct PlotSeries {
  std::string label;
  std::vector<double> mean, lo, hi;  // one entry per x value
};

void write_line_plot(const std::filesystem::path& path, const std::vector<double>& x,
                     const std::vector<PlotSeries>& series, const std::string& x_label,
                     const std::string& y_label, int width = 640, int height = 440);

}  // namespace wdm

#endif
