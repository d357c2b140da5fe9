#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>

#include "rbound/density.hpp"
#include "rbound/errors.hpp"
#include "rbound/grid.hpp"
#include "rbound/vicinity.hpp"

namespace rbound {

namespace detail {

//! FFTW plan creation/destruction is not thread-safe; execution is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

//! Smallest size >= n with only factors 2, 3, 5, 7 (fast FFTW sizes).
inline int next_fast_size(int n) {
  for (int c = n;; ++c) {
    int r = c;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return c;
  }
}

inline void check_kernel_fits(const Grid2D& g, const VicinityKernel& k,
                              const char* op) {
  if (k.kernel.nx() > g.nx() || k.kernel.ny() > g.ny())
    throw Error(std::string(op) + ": kernel (" +
                std::to_string(k.kernel.nx()) + "x" +
                std::to_string(k.kernel.ny()) + ") larger than grid (" +
                std::to_string(g.nx()) + "x" + std::to_string(g.ny()) + ")");
  if (std::abs(k.kernel.spec().dx - g.spec().dx) > 1e-12 * g.spec().dx ||
      std::abs(k.kernel.spec().dy - g.spec().dy) > 1e-12 * g.spec().dy)
    throw GridMismatchError(std::string(op) +
                            ": kernel cell spacing differs from grid");
}

} // namespace detail

//! Probability mass of g within the border band that a kernel of the given
//! half-extent can push across the domain boundary. The pre-flight leak
//! check of convolve_distribution bounds the convolution mass loss by this.
inline double border_band_mass(const Grid2D& g, int half_nx, int half_ny) {
  detail::CompensatedSum s;
  for (int j = 0; j < g.ny(); ++j) {
    const bool j_border = j < half_ny || j >= g.ny() - half_ny;
    for (int i = 0; i < g.nx(); ++i) {
      if (j_border || i < half_nx || i >= g.nx() - half_nx) s.add(g.at(i, j));
    }
  }
  return s.value() * g.spec().cell_area();
}

//! O(n*m) nested-summation linear convolution with zero padding; the
//! authoritative reference for convolve_fft.
inline Grid2D convolve_direct(const Grid2D& g, const VicinityKernel& k) {
  detail::check_kernel_fits(g, k, "convolve_direct");
  const int hx = k.half_nx();
  const int hy = k.half_ny();
  const double cell = g.spec().cell_area();
  Grid2D out(g.spec());
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      detail::CompensatedSum s;
      for (int n = -hy; n <= hy; ++n) {
        const int jj = j - n;
        if (jj < 0 || jj >= g.ny()) continue;
        for (int m = -hx; m <= hx; ++m) {
          const int ii = i - m;
          if (ii < 0 || ii >= g.nx()) continue;
          s.add(k.kernel.at(m + hx, n + hy) * g.at(ii, jj));
        }
      }
      out.at(i, j) = s.value() * cell;
    }
  }
  return out;
}

//! Linear convolution via zero-padded FFT. Negative round-off values are
//! clamped to 0; with a sufficient border margin the output mass matches the
//! input mass to ~1e-12 relative.
inline Grid2D convolve_fft(const Grid2D& g, const VicinityKernel& k) {
  detail::check_kernel_fits(g, k, "convolve_fft");
  const int knx = k.kernel.nx();
  const int kny = k.kernel.ny();
  const int px = detail::next_fast_size(g.nx() + knx - 1);
  const int py = detail::next_fast_size(g.ny() + kny - 1);
  const int pxc = px / 2 + 1; // r2c output width

  std::vector<double> a(static_cast<std::size_t>(px) * py, 0.0);
  std::vector<double> b(static_cast<std::size_t>(px) * py, 0.0);
  std::vector<std::complex<double>> fa(static_cast<std::size_t>(pxc) * py);
  std::vector<std::complex<double>> fb(static_cast<std::size_t>(pxc) * py);

  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      a[static_cast<std::size_t>(j) * px + i] = g.at(i, j);
  for (int j = 0; j < kny; ++j)
    for (int i = 0; i < knx; ++i)
      b[static_cast<std::size_t>(j) * px + i] = k.kernel.at(i, j);

  fftw_plan fwd_a, fwd_b, inv;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fwd_a = fftw_plan_dft_r2c_2d(py, px, a.data(),
                                 reinterpret_cast<fftw_complex*>(fa.data()),
                                 FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    fwd_b = fftw_plan_dft_r2c_2d(py, px, b.data(),
                                 reinterpret_cast<fftw_complex*>(fb.data()),
                                 FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    inv = fftw_plan_dft_c2r_2d(py, px,
                               reinterpret_cast<fftw_complex*>(fa.data()),
                               a.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd_a);
  fftw_execute(fwd_b);
  const double scale = 1.0 / (static_cast<double>(px) * py);
  for (std::size_t n = 0; n < fa.size(); ++n) fa[n] *= fb[n] * scale;
  fftw_execute(inv);
  {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(fwd_a);
    fftw_destroy_plan(fwd_b);
    fftw_destroy_plan(inv);
  }

  // The kernel center sits at index (hx, hy) of the kernel grid, so the
  // input-aligned region of the full linear convolution starts there.
  const int hx = k.half_nx();
  const int hy = k.half_ny();
  const double cell = g.spec().cell_area();
  Grid2D out(g.spec());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double v = a[static_cast<std::size_t>(j + hy) * px + (i + hx)] * cell;
      out.at(i, j) = v < 0.0 ? 0.0 : v;
    }
  return out;
}

//! D' = D * v: convolve every class conditional, priors unchanged. The
//! pre-flight leak check fails if more than leak_tol of any conditional's
//! mass sits within the kernel half-extent of the boundary, which is the
//! mass the convolution could push off the grid.
inline LabeledDensity convolve_distribution(const LabeledDensity& d,
                                            const VicinityKernel& k,
                                            double leak_tol = 1e-6) {
  LabeledDensity out;
  out.priors = d.priors;
  for (int c = 0; c < d.num_classes(); ++c) {
    const double band = border_band_mass(d.conditionals[c], k.half_nx(),
                                         k.half_ny());
    if (band > leak_tol)
      throw LeakError("convolve_distribution: class " + std::to_string(c) +
                      " has mass " + std::to_string(band) +
                      " within the kernel half-width of the boundary "
                      "(tolerance " + std::to_string(leak_tol) +
                      "); enlarge the grid extents");
    out.conditionals.push_back(convolve_fft(d.conditionals[c], k));
  }
  return out;
}

} // namespace rbound
