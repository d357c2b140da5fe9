#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rbound/convolution.hpp"
#include "rbound/density.hpp"
#include "rbound/grid.hpp"
#include "rbound/vicinity.hpp"

using namespace rbound;

namespace {

//! Random nonnegative grid with an empty border band so no mass can leak.
Grid2D random_interior_grid(const GridSpec& spec, int border, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Grid2D g(spec);
  for (int j = border; j < spec.ny - border; ++j)
    for (int i = border; i < spec.nx - border; ++i) g.at(i, j) = dist(rng);
  return g;
}

double max_abs_diff(const Grid2D& a, const Grid2D& b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.values().size(); ++n)
    m = std::max(m, std::abs(a.values()[n] - b.values()[n]));
  return m;
}

} // namespace

TEST_CASE("delta kernel is the identity of convolution") {
  GridSpec spec{0, 0, 0.1, 0.1, 24, 18};
  const Grid2D g = random_interior_grid(spec, 0, 5);
  const VicinityKernel delta = build_kernel(Norm::LInf, 0.0, 0.1, 0.1);
  const Grid2D direct = convolve_direct(g, delta);
  const Grid2D fast = convolve_fft(g, delta);
  REQUIRE(max_abs_diff(direct, g) <= 1e-12);
  REQUIRE(max_abs_diff(fast, g) <= 1e-12);
}

TEST_CASE("impulse response of a 3x3 uniform kernel") {
  GridSpec spec{0, 0, 0.5, 0.5, 3, 3};
  Grid2D g(spec);
  g.at(1, 1) = 1.0 / spec.cell_area(); // unit-mass impulse
  const VicinityKernel k = build_kernel(Norm::LInf, 0.5, 0.5, 0.5);
  REQUIRE(k.kernel.nx() == 3);

  for (const Grid2D& out : {convolve_direct(g, k), convolve_fft(g, k)}) {
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        REQUIRE(out.at(i, j) * spec.cell_area() ==
                Catch::Approx(1.0 / 9.0).epsilon(1e-12));
  }
}

TEST_CASE("constant grid stays constant away from the boundary") {
  GridSpec spec{0, 0, 0.05, 0.05, 40, 40};
  const Grid2D g(spec, 3.25);
  const VicinityKernel k = build_kernel(Norm::L2, 0.2, 0.05, 0.05);
  const Grid2D out = convolve_direct(g, k);
  const int hx = k.half_nx(), hy = k.half_ny();
  for (int j = hy; j < spec.ny - hy; ++j)
    for (int i = hx; i < spec.nx - hx; ++i)
      REQUIRE(out.at(i, j) == Catch::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("fft path matches the direct oracle on random grids") {
  GridSpec spec{-1, -1, 2.0 / 64, 2.0 / 64, 64, 64};
  const VicinityKernel k =
      build_kernel(Norm::LInf, 5 * spec.dx + 1e-12, spec.dx, spec.dy);
  REQUIRE(k.kernel.nx() == 11);
  for (unsigned seed : {11u, 12u, 13u}) {
    const Grid2D g = random_interior_grid(spec, 0, seed);
    const Grid2D a = convolve_direct(g, k);
    const Grid2D b = convolve_fft(g, k);
    REQUIRE(max_abs_diff(a, b) <= 1e-9 * g.max_value());
  }
}

TEST_CASE("mass conservation with an interior-supported density") {
  GridSpec spec{0, 0, 0.02, 0.02, 100, 100};
  const Grid2D g = random_interior_grid(spec, 14, 77);
  for (Norm norm : {Norm::LInf, Norm::L2}) {
    const VicinityKernel k = build_kernel(norm, 0.2, 0.02, 0.02);
    REQUIRE(k.half_nx() <= 14);
    const double before = integrate(g);
    REQUIRE(integrate(convolve_fft(g, k)) ==
            Catch::Approx(before).epsilon(1e-9));
    REQUIRE(integrate(convolve_direct(g, k)) ==
            Catch::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("smoothing never raises the supremum") {
  GridSpec spec{0, 0, 0.02, 0.02, 80, 80};
  const Grid2D g = random_interior_grid(spec, 0, 31);
  const VicinityKernel k = build_kernel(Norm::L2, 0.11, 0.02, 0.02);
  REQUIRE(convolve_fft(g, k).max_value() <= g.max_value() + 1e-12);
  REQUIRE(convolve_direct(g, k).max_value() <= g.max_value() + 1e-12);
}

TEST_CASE("kernel larger than the grid is rejected") {
  GridSpec spec{0, 0, 0.1, 0.1, 8, 8};
  const Grid2D g(spec, 1.0);
  const VicinityKernel k = build_kernel(Norm::LInf, 0.45, 0.1, 0.1);
  REQUIRE(k.kernel.nx() == 9);
  REQUIRE_THROWS_AS(convolve_fft(g, k), Error);
  REQUIRE_THROWS_AS(convolve_direct(g, k), Error);
}

TEST_CASE("convolve_distribution: eps=0 returns D unchanged") {
  GridSpec spec{-3, -3, 6.0 / 64, 6.0 / 64, 64, 64};
  const LabeledDensity d = make_gaussian_mixture(
      {0.5, 0.5}, {{-0.8, 0.0}, {0.8, 0.0}}, {0.5, 0.5}, spec);
  const VicinityKernel delta = build_kernel(Norm::LInf, 0.0, spec.dx, spec.dy);
  const LabeledDensity dprime = convolve_distribution(d, delta);
  REQUIRE(dprime.priors == d.priors);
  for (int k = 0; k < 2; ++k)
    REQUIRE(max_abs_diff(dprime.conditionals[k], d.conditionals[k]) <= 1e-12);
}

TEST_CASE("convolve_distribution: conserves conditional masses") {
  GridSpec spec{-4, -4, 8.0 / 96, 8.0 / 96, 96, 96};
  const LabeledDensity d = make_gaussian_mixture(
      {0.4, 0.6}, {{-1.0, 0.5}, {1.0, -0.5}}, {0.4, 0.45}, spec);
  const VicinityKernel k = build_kernel(Norm::LInf, 0.25, spec.dx, spec.dy);
  const LabeledDensity dprime = convolve_distribution(d, k);
  for (int c = 0; c < 2; ++c)
    REQUIRE(integrate(dprime.conditionals[c]) ==
            Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("convolve_distribution: boundary-hugging density trips the leak check") {
  GridSpec spec{0, 0, 0.05, 0.05, 40, 40};
  // all mass in the left border column
  Grid2D g(spec);
  for (int j = 0; j < spec.ny; ++j) g.at(0, j) = 1.0;
  LabeledDensity d;
  d.priors = {0.5, 0.5};
  d.conditionals = {normalize(g), normalize(Grid2D(spec, 1.0))};
  const VicinityKernel k = build_kernel(Norm::LInf, 0.2, 0.05, 0.05);
  REQUIRE_THROWS_AS(convolve_distribution(d, k), LeakError);
}
