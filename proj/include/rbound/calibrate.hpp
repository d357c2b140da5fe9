#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "rbound/bayes.hpp"
#include "rbound/density.hpp"
#include "rbound/errors.hpp"
#include "rbound/grid.hpp"

namespace rbound {

//! Default Moons extents: both arcs plus generous Gaussian-tail and kernel
//! margins. At 512 cells per axis the spacing is ~0.01.
inline GridSpec default_moons_spec(int nx = 512, int ny = 512) {
  const double x_lo = -2.0, x_hi = 3.0, y_lo = -1.75, y_hi = 2.25;
  return GridSpec{x_lo, y_lo, (x_hi - x_lo) / nx, (y_hi - y_lo) / ny, nx, ny};
}

struct MoonsCalibration {
  double sigma_star = 0.0;
  double beta_star = 0.0; //!< Bayes error at sigma_star
  std::vector<std::pair<double, double>> table; //!< (sigma, beta) sweep
};

//! The Moons smearing width is not pinned down by the reference figures, so
//! it is calibrated: sweep sigma and pick the value whose grid Bayes error is
//! closest to the target. All other reported quantities then act as genuine
//! predictions.
inline MoonsCalibration calibrate_moons_sigma(double target_beta,
                                              const GridSpec& spec,
                                              double sigma_min = 0.10,
                                              double sigma_max = 0.35,
                                              double sigma_step = 0.005,
                                              int quadrature_points = 64) {
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min) || !(sigma_step > 0.0))
    throw Error("calibrate_moons_sigma: bad sigma range");
  MoonsCalibration cal;
  double best_gap = std::numeric_limits<double>::infinity();
  const int steps = static_cast<int>(
      std::floor((sigma_max - sigma_min) / sigma_step + 1e-9));
  for (int s = 0; s <= steps; ++s) {
    const double sigma = sigma_min + s * sigma_step;
    const MoonsParams params{sigma, quadrature_points};
    const LabeledDensity d = make_moons_density(params, spec);
    const double beta = bayes_error(d);
    cal.table.emplace_back(sigma, beta);
    const double gap = std::abs(beta - target_beta);
    if (gap < best_gap) {
      best_gap = gap;
      cal.sigma_star = sigma;
      cal.beta_star = beta;
    }
  }
  return cal;
}

} // namespace rbound
