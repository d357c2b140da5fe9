#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rbound/bayes.hpp"
#include "rbound/density.hpp"
#include "rbound/errors.hpp"
#include "rbound/grid.hpp"
#include "rbound/vicinity.hpp"

namespace rbound {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

} // namespace detail

//! Deterministic engine for a (seed, stream) pair; distinct streams give
//! independent, reproducible sequences regardless of execution order.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t s = seed ^ (stream * 0xD1B54A32D192ED03ull);
  const std::uint64_t a = detail::splitmix64(s);
  const std::uint64_t b = detail::splitmix64(s);
  return std::mt19937_64(a ^ (b << 1));
}

//! Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

//! Standard normal via Box-Muller (single value, no caching).
inline double standard_normal(std::mt19937_64& rng) {
  double u;
  do {
    u = uniform01(rng);
  } while (u <= 0.0);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

//! Index in [0, weights.size()) with probability proportional to weights.
inline int sample_index(std::mt19937_64& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size()) - 1;
}

//! Draw points from a nonnegative grid density: a cell by cumulative mass,
//! then uniform within the cell.
class GridSampler {
public:
  explicit GridSampler(const Grid2D& g) : spec_(g.spec()) {
    cdf_.reserve(g.spec().cell_count());
    double acc = 0.0;
    for (double v : g.values()) {
      if (v < 0.0) throw Error("GridSampler: negative density");
      acc += v;
      cdf_.push_back(acc);
    }
    if (!(acc > 0.0)) throw DegenerateDensityError("GridSampler: zero mass");
    total_ = acc;
  }

  std::array<double, 2> sample(std::mt19937_64& rng) const {
    const double u = uniform01(rng) * total_;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t n = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
    const int i = static_cast<int>(n % spec_.nx);
    const int j = static_cast<int>(n / spec_.nx);
    return {spec_.x0 + (i + uniform01(rng)) * spec_.dx,
            spec_.y0 + (j + uniform01(rng)) * spec_.dy};
  }

private:
  GridSpec spec_;
  std::vector<double> cdf_;
  double total_ = 0.0;
};

//! Exact generative Moons sampler: a uniform arc angle plus isotropic
//! Gaussian noise, classes by prior.
inline SampleSet sample_moons(std::size_t n, const MoonsParams& params,
                              std::mt19937_64& rng,
                              std::array<double, 2> priors = {0.5, 0.5}) {
  params.validate();
  SampleSet s;
  s.points.reserve(n);
  s.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = uniform01(rng) < priors[0] ? 0 : 1;
    const double t = uniform(rng, 0.0, M_PI);
    double x1 = std::cos(t) + params.sigma * standard_normal(rng);
    double x2 = std::sin(t) + params.sigma * standard_normal(rng);
    if (label == 1) {
      x1 = 1.0 - x1;
      x2 = 0.5 - x2;
    }
    s.points.push_back({x1, x2});
    s.labels.push_back(label);
  }
  return s;
}

//! Exact sampler for per-class isotropic Gaussian mixtures.
inline SampleSet sample_gaussian_mixture(
    std::size_t n, std::span<const double> priors,
    const std::vector<std::vector<GaussianComponent>>& components,
    std::mt19937_64& rng) {
  SampleSet s;
  s.points.reserve(n);
  s.labels.reserve(n);
  std::vector<std::vector<double>> weights(components.size());
  for (std::size_t k = 0; k < components.size(); ++k)
    for (const auto& c : components[k]) weights[k].push_back(c.weight);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = sample_index(rng, priors);
    const auto& comp =
        components[k][static_cast<std::size_t>(sample_index(rng, weights[k]))];
    s.points.push_back({comp.cx + comp.sigma * standard_normal(rng),
                        comp.cy + comp.sigma * standard_normal(rng)});
    s.labels.push_back(k);
  }
  return s;
}

//! Sample any LabeledDensity through its grids: class by prior, point from
//! the class conditional.
inline SampleSet sample_labeled_density(std::size_t n, const LabeledDensity& d,
                                        std::mt19937_64& rng) {
  std::vector<GridSampler> samplers;
  samplers.reserve(d.num_classes());
  for (const auto& g : d.conditionals) samplers.emplace_back(g);
  SampleSet s;
  s.points.reserve(n);
  s.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = sample_index(rng, d.priors);
    s.points.push_back(samplers[static_cast<std::size_t>(k)].sample(rng));
    s.labels.push_back(k);
  }
  return s;
}

//! Uniform point in the epsilon-ball of the given norm around the origin.
inline std::array<double, 2> sample_in_ball(std::mt19937_64& rng, Norm norm,
                                            double epsilon) {
  if (norm == Norm::LInf)
    return {uniform(rng, -epsilon, epsilon), uniform(rng, -epsilon, epsilon)};
  for (;;) {
    const double x = uniform(rng, -epsilon, epsilon);
    const double y = uniform(rng, -epsilon, epsilon);
    if (x * x + y * y <= epsilon * epsilon) return {x, y};
  }
}

} // namespace rbound
