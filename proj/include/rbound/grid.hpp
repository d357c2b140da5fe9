#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rbound/errors.hpp"

namespace rbound {

//! Geometry of a rectangular cell grid. Values live at cell centers, so cell
//! (i, j) represents the point (x0 + (i+0.5)*dx, y0 + (j+0.5)*dy). Two grids
//! are combinable only if their specs match exactly; there is no resampling.
struct GridSpec {
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  int nx = 1;
  int ny = 1;

  bool operator==(const GridSpec&) const = default;

  double x_center(int i) const { return x0 + (i + 0.5) * dx; }
  double y_center(int j) const { return y0 + (j + 0.5) * dy; }
  double x_max() const { return x0 + nx * dx; }
  double y_max() const { return y0 + ny * dy; }
  double cell_area() const { return dx * dy; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }

  void validate() const {
    if (!(dx > 0.0) || !(dy > 0.0))
      throw Error("GridSpec: cell spacing must be positive (dx=" +
                  std::to_string(dx) + ", dy=" + std::to_string(dy) + ")");
    if (nx < 1 || ny < 1)
      throw Error("GridSpec: cell counts must be >= 1 (nx=" +
                  std::to_string(nx) + ", ny=" + std::to_string(ny) + ")");
  }

  std::string describe() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d,%d",
                  x0, y0, dx, dy, nx, ny);
    return buf;
  }
};

//! A scalar field sampled on a GridSpec: densities (per unit area),
//! posteriors, or 0/1 masks. Storage is row-major with y as the slow index.
class Grid2D {
public:
  Grid2D() : values_(1, 0.0) {}

  explicit Grid2D(const GridSpec& spec, double fill = 0.0)
    : spec_(spec), values_(spec.cell_count(), fill) {
    spec_.validate();
  }

  Grid2D(const GridSpec& spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
    spec_.validate();
    if (values_.size() != spec_.cell_count())
      throw Error("Grid2D: value count does not match spec");
  }

  const GridSpec& spec() const { return spec_; }
  int nx() const { return spec_.nx; }
  int ny() const { return spec_.ny; }

  double at(int i, int j) const { return values_[index(i, j)]; }
  double& at(int i, int j) { return values_[index(i, j)]; }

  //! Value of the cell containing (x, y); 0 outside the domain.
  double value_at(double x, double y) const {
    const int i = static_cast<int>(std::floor((x - spec_.x0) / spec_.dx));
    const int j = static_cast<int>(std::floor((y - spec_.y0) / spec_.dy));
    if (i < 0 || i >= spec_.nx || j < 0 || j >= spec_.ny) return 0.0;
    return at(i, j);
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max_value() const {
    return *std::max_element(values_.begin(), values_.end());
  }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * spec_.nx + i;
  }

private:
  GridSpec spec_{};
  std::vector<double> values_;
};

namespace detail {

//! Neumaier compensated summation; keeps grid-sized reductions near 1 ulp.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }

  double value() const { return sum + comp; }
};

inline void require_same_spec(const GridSpec& a, const GridSpec& b,
                              const char* op) {
  if (!(a == b))
    throw GridMismatchError(std::string(op) + ": incompatible grids (" +
                            a.describe() + " vs " + b.describe() + ")");
}

} // namespace detail

//! Total mass by the midpoint rule: sum(values) * dx * dy.
inline double integrate(const Grid2D& g) {
  detail::CompensatedSum s;
  for (double v : g.values()) s.add(v);
  return s.value() * g.spec().cell_area();
}

//! Mass restricted to a 0/1 mask on the same spec.
inline double integrate_masked(const Grid2D& g, const Grid2D& mask) {
  detail::require_same_spec(g.spec(), mask.spec(), "integrate_masked");
  detail::CompensatedSum s;
  const auto gv = g.values();
  const auto mv = mask.values();
  for (std::size_t n = 0; n < gv.size(); ++n) s.add(gv[n] * mv[n]);
  return s.value() * g.spec().cell_area();
}

//! Scale to unit mass. Throws DegenerateDensityError on (numerically)
//! zero-mass input.
inline Grid2D normalize(const Grid2D& g) {
  const double mass = integrate(g);
  if (!(mass > 0.0))
    throw DegenerateDensityError(
        "normalize: degenerate density, mass = " + std::to_string(mass));
  Grid2D out = g;
  const double inv = 1.0 / mass;
  for (double& v : out.values()) v *= inv;
  return out;
}

//! Cellwise maximum of one or more grids on a shared spec.
inline Grid2D pointwise_max(std::span<const Grid2D> grids) {
  if (grids.empty()) throw Error("pointwise_max: empty grid list");
  Grid2D out = grids[0];
  for (std::size_t k = 1; k < grids.size(); ++k) {
    detail::require_same_spec(out.spec(), grids[k].spec(), "pointwise_max");
    const auto v = grids[k].values();
    auto o = out.values();
    for (std::size_t n = 0; n < o.size(); ++n) o[n] = std::max(o[n], v[n]);
  }
  return out;
}

inline Grid2D pointwise_max(const std::vector<Grid2D>& grids) {
  return pointwise_max(std::span<const Grid2D>(grids));
}

inline Grid2D scaled(const Grid2D& g, double factor) {
  Grid2D out = g;
  for (double& v : out.values()) v *= factor;
  return out;
}

inline Grid2D sum(const Grid2D& a, const Grid2D& b) {
  detail::require_same_spec(a.spec(), b.spec(), "sum");
  Grid2D out = a;
  const auto bv = b.values();
  auto o = out.values();
  for (std::size_t n = 0; n < o.size(); ++n) o[n] += bv[n];
  return out;
}

// --- CSV serialization ------------------------------------------------------
//
// Layout: a header line `# x0,y0,dx,dy,nx,ny`, then ny lines of nx
// comma-separated values with the row index increasing in y. Extra leading
// `#` lines (provenance) are permitted and skipped on read.

inline void write_grid_csv(std::ostream& os, const Grid2D& g,
                           std::span<const std::string> comments = {}) {
  for (const auto& c : comments) os << "# " << c << "\n";
  char buf[32];
  os << "# " << g.spec().describe() << "\n";
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", g.at(i, j));
      os << buf << (i + 1 < g.nx() ? "," : "\n");
    }
  }
}

inline void write_grid_csv(const std::filesystem::path& path, const Grid2D& g,
                           std::span<const std::string> comments = {}) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_grid_csv(os, g, comments);
  if (!os) throw IoError("write failed: " + path.string());
}

namespace detail {

inline std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> row;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) next = line.size();
    try {
      row.push_back(std::stod(line.substr(pos, next - pos)));
    } catch (const std::exception&) {
      throw IoError("grid csv: cannot parse value '" +
                    line.substr(pos, next - pos) + "'");
    }
    pos = next + 1;
    if (next == line.size()) break;
  }
  return row;
}

} // namespace detail

inline Grid2D read_grid_csv(std::istream& is) {
  GridSpec spec;
  bool have_spec = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      // The spec header is the comment line that parses as exactly six
      // comma-separated numbers; other comment lines are provenance.
      std::string body = line.substr(1);
      std::vector<double> fields;
      try {
        fields = detail::parse_csv_row(body);
      } catch (const IoError&) {
        continue;
      }
      if (fields.size() == 6) {
        spec = GridSpec{fields[0], fields[1], fields[2], fields[3],
                        static_cast<int>(fields[4]),
                        static_cast<int>(fields[5])};
        have_spec = true;
      }
      continue;
    }
    break;
  }
  if (!have_spec) throw IoError("grid csv: missing '# x0,y0,dx,dy,nx,ny' header");
  spec.validate();

  Grid2D g(spec);
  int j = 0;
  while (j < spec.ny) {
    if (line.empty()) {
      if (!std::getline(is, line)) break;
      continue;
    }
    const auto row = detail::parse_csv_row(line);
    if (static_cast<int>(row.size()) != spec.nx)
      throw IoError("grid csv: row " + std::to_string(j) + " has " +
                    std::to_string(row.size()) + " values, expected " +
                    std::to_string(spec.nx));
    for (int i = 0; i < spec.nx; ++i) g.at(i, j) = row[i];
    ++j;
    line.clear();
  }
  if (j != spec.ny)
    throw IoError("grid csv: expected " + std::to_string(spec.ny) +
                  " data rows, got " + std::to_string(j));
  return g;
}

inline Grid2D read_grid_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return read_grid_csv(is);
}

} // namespace rbound
