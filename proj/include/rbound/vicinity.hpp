#pragma once

#include <cmath>
#include <string>

#include "rbound/errors.hpp"
#include "rbound/grid.hpp"

namespace rbound {

//! Perturbation-ball norm for vicinity functions.
enum class Norm { LInf, L2 };

inline const char* norm_name(Norm n) { return n == Norm::LInf ? "linf" : "l2"; }

inline Norm parse_norm(const std::string& s) {
  if (s == "linf" || s == "Linf" || s == "LINF") return Norm::LInf;
  if (s == "l2" || s == "L2") return Norm::L2;
  throw Error("unknown norm '" + s + "' (expected linf or l2)");
}

//! Discretized uniform vicinity function: constant 1/eps_v over the ball of
//! radius epsilon, zero elsewhere. The kernel grid is odd-sized and centered
//! at the origin; after discretization the cell sum is renormalized so the
//! discrete mass is exactly 1 (mass conservation of convolution relies on
//! this).
struct VicinityKernel {
  Norm norm = Norm::LInf;
  double epsilon = 0.0;
  Grid2D kernel;
  //! Continuous support volume (area): (2 eps)^2 for LInf, pi eps^2 for L2.
  double eps_v = 0.0;
  //! Radius of the disk with the same area as the support.
  double eps_eff = 0.0;

  int half_nx() const { return (kernel.nx() - 1) / 2; }
  int half_ny() const { return (kernel.ny() - 1) / 2; }
};

//! Radius of the dim-ball whose volume equals the vicinity support volume:
//! pi^(d/2) / Gamma(d/2 + 1) * eps_eff^d = vol(support). For L2 this is the
//! radius itself; for LInf the support is the cube (2 eps)^d.
inline double effective_radius(Norm norm, double epsilon, int dim) {
  if (dim < 1) throw Error("effective_radius: dim must be >= 1");
  if (epsilon < 0.0) throw Error("effective_radius: epsilon must be >= 0");
  if (norm == Norm::L2) return epsilon;
  // eps_eff = 2 eps * Gamma(d/2 + 1)^(1/d) / sqrt(pi); lgamma keeps the
  // unit-ball volume factor finite for large dim.
  const double d = static_cast<double>(dim);
  const double log_gamma = std::lgamma(d / 2.0 + 1.0);
  return 2.0 * epsilon * std::exp(log_gamma / d) / std::sqrt(M_PI);
}

//! Build the discretized vicinity function for cell spacing (dx, dy).
//! Cell membership is decided by the cell center; epsilon = 0 degenerates to
//! the single-cell discrete delta with value 1/(dx*dy).
inline VicinityKernel build_kernel(Norm norm, double epsilon, double dx,
                                   double dy) {
  if (epsilon < 0.0) throw Error("build_kernel: epsilon must be >= 0");
  if (!(dx > 0.0) || !(dy > 0.0))
    throw Error("build_kernel: cell spacing must be positive");

  // Half-extent in cells: centers k*dx with |k*dx| <= eps. The relative
  // slack absorbs cases like eps/dx landing a hair under an integer.
  const double tol = 1e-12 * std::max(1.0, epsilon);
  const int hx = epsilon > 0.0
                     ? static_cast<int>(std::floor((epsilon + tol) / dx))
                     : 0;
  const int hy = epsilon > 0.0
                     ? static_cast<int>(std::floor((epsilon + tol) / dy))
                     : 0;

  GridSpec spec{-(hx + 0.5) * dx, -(hy + 0.5) * dy, dx, dy,
                2 * hx + 1, 2 * hy + 1};
  Grid2D g(spec);

  VicinityKernel k;
  k.norm = norm;
  k.epsilon = epsilon;
  k.eps_eff = effective_radius(norm, epsilon, 2);

  if (epsilon == 0.0) {
    g.at(0, 0) = 1.0 / (dx * dy);
    k.eps_v = 0.0;
    k.kernel = std::move(g);
    return k;
  }

  k.eps_v = (norm == Norm::LInf) ? (2.0 * epsilon) * (2.0 * epsilon)
                                 : M_PI * epsilon * epsilon;
  const double fill = 1.0 / k.eps_v;
  const double eps2 = epsilon * epsilon * (1.0 + 2e-12);
  for (int j = -hy; j <= hy; ++j) {
    for (int i = -hx; i <= hx; ++i) {
      const double cx = i * dx;
      const double cy = j * dy;
      const bool inside = (norm == Norm::LInf)
                              ? (std::abs(cx) <= epsilon + tol &&
                                 std::abs(cy) <= epsilon + tol)
                              : (cx * cx + cy * cy <= eps2);
      if (inside) g.at(i + hx, j + hy) = fill;
    }
  }

  const double mass = integrate(g);
  if (!(mass > 0.0))
    throw Error("build_kernel: empty kernel support (epsilon too small "
                "relative to cell spacing?)");
  for (double& v : g.values()) v /= mass;
  k.kernel = std::move(g);
  return k;
}

} // namespace rbound
