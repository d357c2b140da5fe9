#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rbound/errors.hpp"
#include "rbound/grid.hpp"

namespace rbound {

//! Class priors P(y=k) together with per-class conditional densities
//! p(x|y=k) on a shared grid. Also used for convolved and hardened
//! distributions, in which case individual classes may carry zero mass.
struct LabeledDensity {
  std::vector<double> priors;
  std::vector<Grid2D> conditionals;

  int num_classes() const { return static_cast<int>(priors.size()); }
  const GridSpec& spec() const { return conditionals.at(0).spec(); }

  //! Check the distribution invariants: >= 2 classes, priors a probability
  //! vector, unit-mass conditionals (classes with ~zero prior are exempt,
  //! which hardened distributions need).
  void validate(double prior_tol = 1e-9, double mass_tol = 1e-4) const {
    if (num_classes() < 2)
      throw Error("LabeledDensity: need at least 2 classes, got " +
                  std::to_string(num_classes()));
    if (conditionals.size() != priors.size())
      throw Error("LabeledDensity: priors/conditionals size mismatch");
    detail::CompensatedSum ps;
    for (double p : priors) {
      if (p < 0.0) throw Error("LabeledDensity: negative prior");
      ps.add(p);
    }
    if (std::abs(ps.value() - 1.0) > prior_tol)
      throw Error("LabeledDensity: priors sum to " + std::to_string(ps.value()));
    for (int k = 0; k < num_classes(); ++k) {
      detail::require_same_spec(spec(), conditionals[k].spec(), "LabeledDensity");
      if (priors[k] <= prior_tol) continue;
      const double mass = integrate(conditionals[k]);
      if (std::abs(mass - 1.0) > mass_tol)
        throw Error("LabeledDensity: class " + std::to_string(k) +
                    " conditional mass " + std::to_string(mass));
    }
  }
};

//! A finite labeled data set: 2-D points with class indices >= 0.
struct SampleSet {
  std::vector<std::array<double, 2>> points;
  std::vector<int> labels;

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.size() != labels.size())
      throw Error("SampleSet: points/labels length mismatch");
    for (int l : labels)
      if (l < 0) throw Error("SampleSet: negative label");
  }

  int num_classes() const {
    int m = -1;
    for (int l : labels) m = std::max(m, l);
    return m + 1;
  }
};

// --- Moons analytic densities ------------------------------------------------
//
// Each moon is a uniform distribution along a half-circle arc smeared with an
// isotropic Gaussian: p(x) = 1/(2 pi^2 sigma^2) * Int_0^pi
// exp(-|x - a(t)|^2 / (2 sigma^2)) dt, with a(t) = (cos t, sin t) for class 0
// and a(t) = (1 - cos t, 0.5 - sin t) for class 1. This form is the
// exponent-merged version of the cos/sin likelihoods and never overflows.

struct MoonsParams {
  double sigma = 0.2;         //!< Gaussian smearing std-dev.
  int quadrature_points = 64; //!< initial panel count for the arc integral

  void validate() const {
    if (!(sigma > 0.0)) throw Error("MoonsParams: sigma must be > 0");
    if (quadrature_points < 16)
      throw Error("MoonsParams: quadrature_points must be >= 16");
  }
};

namespace detail {

//! Arc nodes (cos t_m, sin t_m) at t_m = m*pi/n, cached per panel count.
//! thread_local so rasterization threads never contend.
inline const std::vector<std::array<double, 2>>& arc_nodes(int n) {
  thread_local std::unordered_map<int, std::vector<std::array<double, 2>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::array<double, 2>> nodes(static_cast<std::size_t>(n) + 1);
  for (int m = 0; m <= n; ++m) {
    const double t = M_PI * m / n;
    nodes[m] = {std::cos(t), std::sin(t)};
  }
  return cache.emplace(n, std::move(nodes)).first->second;
}

inline double arc_integrand(double u1, double u2, double inv_two_sigma2,
                            const std::array<double, 2>& node) {
  const double d1 = u1 - node[0];
  const double d2 = u2 - node[1];
  return std::exp(-(d1 * d1 + d2 * d2) * inv_two_sigma2);
}

//! Squared distance from (u1, u2) to the upper half-circle arc.
inline double arc_dist2(double u1, double u2) {
  if (u2 >= 0.0) {
    const double r = std::sqrt(u1 * u1 + u2 * u2);
    const double d = r - 1.0;
    return d * d;
  }
  const double a = (u1 - 1.0) * (u1 - 1.0) + u2 * u2;
  const double b = (u1 + 1.0) * (u1 + 1.0) + u2 * u2;
  return std::min(a, b);
}

//! Int_0^pi exp(-|u - a(t)|^2/(2 sigma^2)) dt by trapezoid doubling with
//! Simpson (Richardson) extrapolation until the relative change drops below
//! rel_tol. Node values are reused across refinement levels. Points whose
//! nearest arc distance puts the whole integrand below ~1e-26 of the peak
//! scale short-circuit to 0.
inline double moons_arc_integral(double u1, double u2, double sigma,
                                 int initial_panels,
                                 double rel_tol = 1e-8) {
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  if (arc_dist2(u1, u2) * inv_two_sigma2 > 60.0) return 0.0;

  // Plain accumulation: a few hundred positive terms lose ~1e-14 relative,
  // far below the quadrature tolerance.
  int n = initial_panels;
  const auto& base = arc_nodes(n);
  double t0 = 0.5 * (arc_integrand(u1, u2, inv_two_sigma2, base[0]) +
                     arc_integrand(u1, u2, inv_two_sigma2, base[n]));
  for (int m = 1; m < n; ++m)
    t0 += arc_integrand(u1, u2, inv_two_sigma2, base[m]);
  double trap = t0 * (M_PI / n);

  double simpson_prev = 0.0;
  bool have_prev = false;
  constexpr int kMaxPanels = 1 << 20;
  while (n < kMaxPanels) {
    const int n2 = 2 * n;
    const auto& nodes = arc_nodes(n2);
    double mid = 0.0;
    for (int m = 1; m < n2; m += 2)
      mid += arc_integrand(u1, u2, inv_two_sigma2, nodes[m]);
    const double trap2 = 0.5 * trap + mid * (M_PI / n2);
    const double simpson = (4.0 * trap2 - trap) / 3.0;
    if (have_prev) {
      const double diff = std::abs(simpson - simpson_prev);
      if (diff <= rel_tol * std::abs(simpson)) return simpson;
      if (simpson == 0.0 && simpson_prev == 0.0) return 0.0;
    }
    simpson_prev = simpson;
    have_prev = true;
    trap = trap2;
    n = n2;
  }
  throw ConvergenceError("moons arc integral did not converge at (" +
                             std::to_string(u1) + ", " + std::to_string(u2) +
                             ")",
                         simpson_prev, trap);
}

} // namespace detail

//! Likelihood p(x | y = class_index) of the Moons distribution.
inline double eval_moons(int class_index, double x1, double x2,
                         const MoonsParams& params) {
  params.validate();
  if (class_index != 0 && class_index != 1)
    throw Error("eval_moons: class_index must be 0 or 1");
  double u1 = x1;
  double u2 = x2;
  if (class_index == 1) {
    // The lower moon is the upper moon's arc reflected through (0.5, 0.25).
    u1 = 1.0 - x1;
    u2 = 0.5 - x2;
  }
  const double integral = detail::moons_arc_integral(
      u1, u2, params.sigma, params.quadrature_points);
  return integral / (2.0 * M_PI * M_PI * params.sigma * params.sigma);
}

//! (p(.|y=k) * v)(x1, x2) for the LInf box kernel of radius eps, evaluated by
//! nested quadrature: a midpoint rule over the box with the arc integral of
//! eval_moons inside. Serves as the point oracle for the grid FFT pipeline.
inline double moons_convolved_point(int class_index, double x1, double x2,
                                    const MoonsParams& params, double eps,
                                    int abscissae = 64) {
  if (!(eps > 0.0)) throw Error("moons_convolved_point: eps must be > 0");
  const int m = std::max(abscissae, 64);
  const double h = 2.0 * eps / m;
  detail::CompensatedSum s;
  for (int b = 0; b < m; ++b) {
    const double u2 = x2 - eps + (b + 0.5) * h;
    for (int a = 0; a < m; ++a) {
      const double u1 = x1 - eps + (a + 0.5) * h;
      s.add(eval_moons(class_index, u1, u2, params));
    }
  }
  // (1/(2 eps)^2) * sum * h^2 collapses to the plain average.
  return s.value() / (static_cast<double>(m) * m);
}

//! Cell-center evaluation of a pointwise density; not normalized.
template <class F>
Grid2D rasterize(F&& f, const GridSpec& spec) {
  spec.validate();
  Grid2D g(spec);
#pragma omp parallel for schedule(dynamic, 4)
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i)
      g.at(i, j) = f(spec.x_center(i), spec.y_center(j));
  return g;
}

namespace detail {

//! Rasterize with a hard leak check, then normalize. The pre-normalization
//! mass must be within leak_tol of 1 or the extents are too small.
template <class F>
Grid2D rasterize_unit_density(F&& f, const GridSpec& spec, double leak_tol,
                              const std::string& what) {
  Grid2D raw = rasterize(std::forward<F>(f), spec);
  const double mass = integrate(raw);
  if (!(mass > 0.0))
    throw DegenerateDensityError(what + ": rasterized mass is zero");
  if (std::abs(mass - 1.0) > leak_tol)
    throw LeakError(what + ": rasterized mass " + std::to_string(mass) +
                    " deviates from 1 by more than " + std::to_string(leak_tol) +
                    "; enlarge the grid extents");
  return normalize(raw);
}

} // namespace detail

//! Both Moons conditionals on a grid, equal priors. The lower moon is the
//! upper moon reflected through (0.5, 0.25); when the grid is symmetric
//! about that point the reflection is exact on cell centers and the second
//! rasterization becomes a mirror copy.
inline LabeledDensity make_moons_density(const MoonsParams& params,
                                         const GridSpec& spec,
                                         double leak_tol = 1e-3) {
  params.validate();
  LabeledDensity d;
  d.priors = {0.5, 0.5};
  d.conditionals.push_back(detail::rasterize_unit_density(
      [&](double x, double y) { return eval_moons(0, x, y, params); }, spec,
      leak_tol, "moons class 0"));

  const double tol = 1e-12 * std::max({1.0, std::abs(spec.x0), std::abs(spec.y0)});
  const bool symmetric = std::abs(spec.x0 + spec.x_max() - 1.0) <= tol &&
                         std::abs(spec.y0 + spec.y_max() - 0.5) <= tol;
  if (symmetric) {
    const Grid2D& c0 = d.conditionals[0];
    Grid2D c1(spec);
    for (int j = 0; j < spec.ny; ++j)
      for (int i = 0; i < spec.nx; ++i)
        c1.at(i, j) = c0.at(spec.nx - 1 - i, spec.ny - 1 - j);
    d.conditionals.push_back(std::move(c1));
  } else {
    d.conditionals.push_back(detail::rasterize_unit_density(
        [&](double x, double y) { return eval_moons(1, x, y, params); }, spec,
        leak_tol, "moons class 1"));
  }
  return d;
}

//! One isotropic Gaussian blob; weight is relative within its class.
struct GaussianComponent {
  double cx = 0.0;
  double cy = 0.0;
  double sigma = 1.0;
  double weight = 1.0;
};

inline LabeledDensity make_gaussian_mixture(
    std::vector<double> priors,
    const std::vector<std::vector<GaussianComponent>>& components,
    const GridSpec& spec, double leak_tol = 1e-3) {
  if (priors.size() != components.size())
    throw Error("make_gaussian_mixture: priors/components size mismatch");
  LabeledDensity d;
  d.priors = std::move(priors);
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& comps = components[k];
    if (comps.empty())
      throw Error("make_gaussian_mixture: class " + std::to_string(k) +
                  " has no components");
    double wsum = 0.0;
    for (const auto& c : comps) {
      if (!(c.sigma > 0.0))
        throw Error("make_gaussian_mixture: nonpositive sigma in class " +
                    std::to_string(k));
      if (!(c.weight > 0.0))
        throw Error("make_gaussian_mixture: nonpositive weight in class " +
                    std::to_string(k));
      wsum += c.weight;
    }
    d.conditionals.push_back(detail::rasterize_unit_density(
        [&comps, wsum](double x, double y) {
          double v = 0.0;
          for (const auto& c : comps) {
            const double rx = x - c.cx;
            const double ry = y - c.cy;
            const double s2 = c.sigma * c.sigma;
            v += c.weight / (wsum * 2.0 * M_PI * s2) *
                 std::exp(-(rx * rx + ry * ry) / (2.0 * s2));
          }
          return v;
        },
        spec, leak_tol, "gaussian mixture class " + std::to_string(k)));
  }
  d.validate();
  return d;
}

//! Single Gaussian per class.
inline LabeledDensity make_gaussian_mixture(
    std::vector<double> priors, const std::vector<std::array<double, 2>>& means,
    const std::vector<double>& sigmas, const GridSpec& spec,
    double leak_tol = 1e-3) {
  if (means.size() != priors.size() || sigmas.size() != priors.size())
    throw Error("make_gaussian_mixture: parameter size mismatch");
  std::vector<std::vector<GaussianComponent>> comps;
  for (std::size_t k = 0; k < means.size(); ++k)
    comps.push_back({GaussianComponent{means[k][0], means[k][1], sigmas[k], 1.0}});
  return make_gaussian_mixture(std::move(priors), comps, spec, leak_tol);
}

//! Axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi].
struct Rect {
  double x_lo = 0.0, y_lo = 0.0, x_hi = 1.0, y_hi = 1.0;
};

//! One uniform rectangular patch per class.
inline LabeledDensity make_uniform_patches(std::vector<double> priors,
                                           const std::vector<Rect>& rects,
                                           const GridSpec& spec) {
  if (rects.size() != priors.size())
    throw Error("make_uniform_patches: priors/rectangles size mismatch");
  LabeledDensity d;
  d.priors = std::move(priors);
  const double tol = 1e-9 * std::max(spec.dx, spec.dy);
  for (std::size_t k = 0; k < rects.size(); ++k) {
    const Rect& r = rects[k];
    if (!(r.x_hi > r.x_lo) || !(r.y_hi > r.y_lo))
      throw Error("make_uniform_patches: empty rectangle for class " +
                  std::to_string(k));
    if (r.x_lo < spec.x0 - tol || r.x_hi > spec.x_max() + tol ||
        r.y_lo < spec.y0 - tol || r.y_hi > spec.y_max() + tol)
      throw Error("make_uniform_patches: rectangle for class " +
                  std::to_string(k) + " lies outside the grid domain");
    const double fill = 1.0 / ((r.x_hi - r.x_lo) * (r.y_hi - r.y_lo));
    Grid2D raw = rasterize(
        [&r, fill](double x, double y) {
          return (x >= r.x_lo && x <= r.x_hi && y >= r.y_lo && y <= r.y_hi)
                     ? fill
                     : 0.0;
        },
        spec);
    d.conditionals.push_back(normalize(raw));
  }
  d.validate();
  return d;
}

// --- Kernel density estimation -----------------------------------------------

//! Gaussian KDE of each class conditional. bandwidth == nullopt selects
//! Scott's rule per class: h_k = n_k^(-1/6) * sigma_hat_k with sigma_hat_k
//! the mean of the two marginal sample std-devs. Priors are the empirical
//! class frequencies.
inline LabeledDensity kde_fit(const SampleSet& samples,
                              std::optional<double> bandwidth,
                              const GridSpec& spec) {
  samples.validate();
  spec.validate();
  const int num_classes = samples.num_classes();
  if (num_classes < 2)
    throw Error("kde_fit: need samples from at least 2 classes");
  if (bandwidth && !(*bandwidth > 0.0))
    throw Error("kde_fit: bandwidth must be > 0");

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t n = 0; n < samples.size(); ++n)
    by_class[samples.labels[n]].push_back(n);

  LabeledDensity d;
  for (int k = 0; k < num_classes; ++k) {
    const auto& idx = by_class[k];
    if (idx.empty())
      throw Error("kde_fit: class " + std::to_string(k) + " has no samples");
    d.priors.push_back(static_cast<double>(idx.size()) / samples.size());

    double h;
    if (bandwidth) {
      h = *bandwidth;
    } else {
      if (idx.size() < 2)
        throw Error("kde_fit: class " + std::to_string(k) +
                    " needs >= 2 samples for automatic bandwidth");
      double m1 = 0.0, m2 = 0.0;
      for (auto n : idx) {
        m1 += samples.points[n][0];
        m2 += samples.points[n][1];
      }
      m1 /= idx.size();
      m2 /= idx.size();
      double v1 = 0.0, v2 = 0.0;
      for (auto n : idx) {
        v1 += (samples.points[n][0] - m1) * (samples.points[n][0] - m1);
        v2 += (samples.points[n][1] - m2) * (samples.points[n][1] - m2);
      }
      const double sd1 = std::sqrt(v1 / (idx.size() - 1));
      const double sd2 = std::sqrt(v2 / (idx.size() - 1));
      const double sigma_hat = 0.5 * (sd1 + sd2);
      if (!(sigma_hat > 0.0))
        throw Error("kde_fit: class " + std::to_string(k) +
                    " has zero spread; give an explicit bandwidth");
      h = std::pow(static_cast<double>(idx.size()), -1.0 / 6.0) * sigma_hat;
    }

    // Scatter truncated separable Gaussians; normalize fixes the truncation
    // (~exp(-18)) and any boundary leak.
    Grid2D g(spec);
    const double inv_two_h2 = 1.0 / (2.0 * h * h);
    const double amp = 1.0 / (2.0 * M_PI * h * h * idx.size());
    const double reach = 6.0 * h;
    std::vector<double> wx, wy;
    for (auto n : idx) {
      const double sx = samples.points[n][0];
      const double sy = samples.points[n][1];
      const int i_lo = std::max(0, static_cast<int>(
                                       std::floor((sx - reach - spec.x0) / spec.dx - 0.5)));
      const int i_hi = std::min(spec.nx - 1,
                                static_cast<int>(std::ceil((sx + reach - spec.x0) / spec.dx - 0.5)));
      const int j_lo = std::max(0, static_cast<int>(
                                       std::floor((sy - reach - spec.y0) / spec.dy - 0.5)));
      const int j_hi = std::min(spec.ny - 1,
                                static_cast<int>(std::ceil((sy + reach - spec.y0) / spec.dy - 0.5)));
      if (i_lo > i_hi || j_lo > j_hi) continue;
      wx.clear();
      wy.clear();
      for (int i = i_lo; i <= i_hi; ++i) {
        const double r = spec.x_center(i) - sx;
        wx.push_back(std::exp(-r * r * inv_two_h2));
      }
      for (int j = j_lo; j <= j_hi; ++j) {
        const double r = spec.y_center(j) - sy;
        wy.push_back(std::exp(-r * r * inv_two_h2));
      }
      for (int j = j_lo; j <= j_hi; ++j) {
        const double wyj = amp * wy[j - j_lo];
        for (int i = i_lo; i <= i_hi; ++i)
          g.at(i, j) += wx[i - i_lo] * wyj;
      }
    }
    d.conditionals.push_back(normalize(g));
  }
  d.validate();
  return d;
}

// --- Sample CSV --------------------------------------------------------------
//
// Format: header `x1,x2,label`, one sample per line, label an integer >= 0.

inline void write_samples_csv(std::ostream& os, const SampleSet& s,
                              std::span<const std::string> comments = {}) {
  for (const auto& c : comments) os << "# " << c << "\n";
  os << "x1,x2,label\n";
  char buf[80];
  for (std::size_t n = 0; n < s.size(); ++n) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d", s.points[n][0],
                  s.points[n][1], s.labels[n]);
    os << buf << "\n";
  }
}

inline void write_samples_csv(const std::filesystem::path& path,
                              const SampleSet& s,
                              std::span<const std::string> comments = {}) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_samples_csv(os, s, comments);
}

inline SampleSet read_samples_csv(std::istream& is) {
  SampleSet s;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.find("x1") != std::string::npos &&
          line.find("label") != std::string::npos)
        continue; // header line
    }
    const auto pos1 = line.find(',');
    const auto pos2 = line.find(',', pos1 + 1);
    if (pos1 == std::string::npos || pos2 == std::string::npos)
      throw IoError("samples csv: expected 'x1,x2,label', got '" + line + "'");
    try {
      const double x1 = std::stod(line.substr(0, pos1));
      const double x2 = std::stod(line.substr(pos1 + 1, pos2 - pos1 - 1));
      const int label = std::stoi(line.substr(pos2 + 1));
      s.points.push_back({x1, x2});
      s.labels.push_back(label);
    } catch (const std::exception&) {
      throw IoError("samples csv: cannot parse line '" + line + "'");
    }
  }
  s.validate();
  return s;
}

inline SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return read_samples_csv(is);
}

} // namespace rbound
