#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbound/errors.hpp"
#include "rbound/grid.hpp"

namespace rbound {

struct HeatmapOptions {
  std::optional<double> vmin; //!< default: data minimum
  std::optional<double> vmax; //!< default: data maximum
  int max_cells = 256;        //!< block-average larger grids down to this
  int cell_px = 3;            //!< pixels per rendered cell
};

namespace detail {

//! Diverging blue-white-red map over t in [0, 1].
inline std::array<int, 3> diverging_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  constexpr std::array<double, 3> lo = {59, 76, 192};
  constexpr std::array<double, 3> mid = {242, 242, 242};
  constexpr std::array<double, 3> hi = {180, 4, 38};
  std::array<int, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    const double v = t < 0.5 ? lo[c] + (mid[c] - lo[c]) * (2.0 * t)
                             : mid[c] + (hi[c] - mid[c]) * (2.0 * t - 1.0);
    rgb[c] = static_cast<int>(std::lround(v));
  }
  return rgb;
}

} // namespace detail

//! Write a grid as an SVG heatmap. The color scale (vmin, vmax), the source
//! grid spec, and any downsampling factor are recorded in the SVG metadata
//! so rendered values stay traceable.
inline void write_heatmap_svg(std::ostream& os, const Grid2D& g,
                              const HeatmapOptions& opt = {},
                              std::span<const std::string> comments = {}) {
  const int bx = std::max(1, (g.nx() + opt.max_cells - 1) / opt.max_cells);
  const int by = std::max(1, (g.ny() + opt.max_cells - 1) / opt.max_cells);
  const int rnx = (g.nx() + bx - 1) / bx;
  const int rny = (g.ny() + by - 1) / by;

  // Block averages; the SVG y axis points down, the grid y axis up.
  std::vector<double> cells(static_cast<std::size_t>(rnx) * rny, 0.0);
  for (int j = 0; j < rny; ++j)
    for (int i = 0; i < rnx; ++i) {
      double acc = 0.0;
      int count = 0;
      for (int jj = j * by; jj < std::min((j + 1) * by, g.ny()); ++jj)
        for (int ii = i * bx; ii < std::min((i + 1) * bx, g.nx()); ++ii) {
          acc += g.at(ii, jj);
          ++count;
        }
      cells[static_cast<std::size_t>(j) * rnx + i] = acc / count;
    }

  double vmin = opt.vmin.value_or(*std::min_element(cells.begin(), cells.end()));
  double vmax = opt.vmax.value_or(*std::max_element(cells.begin(), cells.end()));
  if (!(vmax > vmin)) vmax = vmin + 1.0;

  const int w = rnx * opt.cell_px;
  const int h = rny * opt.cell_px;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<metadata>\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "scale: vmin=%.9g vmax=%.9g colormap=diverging-blue-red\n",
                vmin, vmax);
  os << buf;
  os << "grid: " << g.spec().describe() << "\n";
  std::snprintf(buf, sizeof(buf), "downsample: %dx%d blocks\n", bx, by);
  os << buf;
  for (const auto& c : comments) os << c << "\n";
  os << "</metadata>\n";

  const double inv_span = 1.0 / (vmax - vmin);
  for (int j = 0; j < rny; ++j)
    for (int i = 0; i < rnx; ++i) {
      const double t = (cells[static_cast<std::size_t>(j) * rnx + i] - vmin) *
                       inv_span;
      const auto rgb = detail::diverging_color(t);
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                    "fill=\"rgb(%d,%d,%d)\"/>\n",
                    i * opt.cell_px, (rny - 1 - j) * opt.cell_px, opt.cell_px,
                    opt.cell_px, rgb[0], rgb[1], rgb[2]);
      os << buf;
    }
  os << "</svg>\n";
}

inline void write_heatmap_svg(const std::filesystem::path& path,
                              const Grid2D& g, const HeatmapOptions& opt = {},
                              std::span<const std::string> comments = {}) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_heatmap_svg(os, g, opt, comments);
  if (!os) throw IoError("write failed: " + path.string());
}

} // namespace rbound
