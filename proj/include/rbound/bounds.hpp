#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbound/bayes.hpp"
#include "rbound/convolution.hpp"
#include "rbound/density.hpp"
#include "rbound/errors.hpp"
#include "rbound/grid.hpp"
#include "rbound/vicinity.hpp"

namespace rbound {

//! Every robustness bound for one (distribution, kernel, tau_unc) triple.
//! The zeta values are lower bounds on the irreducible robustness error;
//! 1 - zeta is the corresponding upper bound on (certified) robust accuracy
//! and is always recomputed, never stored.
struct BoundsReport {
  double epsilon = 0.0;
  Norm norm = Norm::LInf;
  double tau_unc = 0.0;
  int nx = 0;
  int ny = 0;

  double beta_d = 0.0;       //!< Bayes error of D
  double beta_dprime = 0.0;  //!< Bayes error of D' = D * v
  double zeta_thm3 = 0.0;    //!< mass of K_D
  double zeta_cor1 = 0.0;    //!< beta_d * |Y| / (|Y| - 1)
  double zeta_cor2 = 0.0;    //!< thm3 + margin term
  double zeta_sharp = 0.0;   //!< mass of K_{D'}
  double zeta_d = 0.0;       //!< hardened-convolved bound

  double ub_zeta_d() const { return 1.0 - zeta_d; }
  double ub_zeta_sharp() const { return 1.0 - zeta_sharp; }
  double ub_zeta_thm3() const { return 1.0 - zeta_thm3; }
  double ub_zeta_cor1() const { return 1.0 - zeta_cor1; }
  double ub_zeta_cor2() const { return 1.0 - zeta_cor2; }
};

struct BoundsOptions {
  double tau_unc = 1e-3;
  double leak_tol = 1e-6;
  std::optional<double> p_min_override;
  //! When set, every pipeline intermediate is written there as grid CSV.
  std::optional<std::filesystem::path> dump_dir;
};

//! Mass of the uncertainty region of D (the Thm-3 lower bound on the
//! irreducible robustness error).
inline double thm3_lower(const LabeledDensity& d, double tau_unc) {
  return uncertainty_region(d, tau_unc).mass;
}

//! beta * |Y| / (|Y| - 1) (the Cor-1 lower bound). Works for any number of
//! classes, including externally estimated Bayes errors of high-dimensional
//! data sets.
inline double cor1_lower(double beta, int num_classes) {
  if (num_classes < 2) throw Error("cor1_lower: need at least 2 classes");
  const double beta_max = 1.0 - 1.0 / num_classes;
  if (!(beta >= 0.0) || beta > beta_max + 1e-12)
    throw Error("cor1_lower: beta " + std::to_string(beta) +
                " outside [0, " + std::to_string(beta_max) + "]");
  return beta * num_classes / (num_classes - 1);
}

//! The Cor-2 lower bound: 2 * eps_eff * p_min * vol(K_D)^((dim-1)/dim) plus
//! the Thm-3 mass, clamped to 1. p_min defaults to the minimum evidence over
//! the numerical support; pass an override when a tighter floor is known.
inline double cor2_lower(const LabeledDensity& d, const VicinityKernel& k,
                         double tau_unc,
                         std::optional<double> p_min_override = {}) {
  const PosteriorField pf = posterior(d);
  const UncertaintyRegion region = uncertainty_region(pf, tau_unc);
  double p_min;
  if (p_min_override) {
    if (*p_min_override < 0.0) throw Error("cor2_lower: negative p_min");
    p_min = *p_min_override;
  } else {
    p_min = std::numeric_limits<double>::infinity();
    const auto sup = pf.support.values();
    const auto ev = pf.evidence.values();
    for (std::size_t n = 0; n < sup.size(); ++n)
      if (sup[n] != 0.0) p_min = std::min(p_min, ev[n]);
    if (!std::isfinite(p_min)) p_min = 0.0;
  }
  const double margin = 2.0 * k.eps_eff * p_min * std::sqrt(region.volume);
  return std::min(1.0, margin + region.mass);
}

//! Mass of the convolved distribution's uncertainty region (the exact
//! zeta-sharp of Eq.-23 form, up to the tau_unc regularization).
inline double zeta_sharp(const LabeledDensity& d, const VicinityKernel& k,
                         double tau_unc, double leak_tol = 1e-6) {
  const LabeledDensity dprime = convolve_distribution(d, k, leak_tol);
  return uncertainty_region(dprime, tau_unc).mass;
}

//! Reassign each cell's full evidence mass to its argmax class (ties to the
//! lowest index). Priors are recomputed from the hardened joints and
//! conditionals renormalized; classes that win no cell keep a zero grid.
inline LabeledDensity harden(const LabeledDensity& dprime) {
  const int num_classes = dprime.num_classes();
  const GridSpec& spec = dprime.spec();
  std::vector<Grid2D> joints(num_classes, Grid2D(spec));
  std::vector<detail::CompensatedSum> mass(num_classes);
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      double evidence = 0.0;
      for (int k = 0; k < num_classes; ++k)
        evidence += dprime.priors[k] * dprime.conditionals[k].at(i, j);
      if (!(evidence > 0.0)) continue;
      // same tolerant tie rule as posterior(): lowest index wins near-ties
      const double tie_tol = 1e-9 * evidence;
      double lead = -1.0;
      int best_k = 0;
      for (int k = 0; k < num_classes; ++k) {
        const double joint = dprime.priors[k] * dprime.conditionals[k].at(i, j);
        if (joint > lead + tie_tol) {
          lead = joint;
          best_k = k;
        }
      }
      joints[best_k].at(i, j) = evidence;
      mass[best_k].add(evidence);
    }

  LabeledDensity out;
  const double cell = spec.cell_area();
  for (int k = 0; k < num_classes; ++k) {
    const double prior = mass[k].value() * cell;
    out.priors.push_back(prior);
    if (prior > 0.0) {
      for (double& v : joints[k].values()) v /= prior;
    }
    out.conditionals.push_back(std::move(joints[k]));
  }
  return out;
}

namespace detail {

inline void dump_grid(const std::optional<std::filesystem::path>& dir,
                      const std::string& name, const Grid2D& g) {
  if (!dir) return;
  std::filesystem::create_directories(*dir);
  write_grid_csv(*dir / (name + ".csv"), g);
}

inline void dump_density(const std::optional<std::filesystem::path>& dir,
                         const std::string& name, const LabeledDensity& d) {
  if (!dir) return;
  for (int k = 0; k < d.num_classes(); ++k)
    dump_grid(dir, name + "_class" + std::to_string(k), d.conditionals[k]);
}

//! zeta_D given the already-convolved D'. Evaluation order is fixed:
//! harden -> convolve -> region -> integrals.
inline double zeta_d_from_dprime(const LabeledDensity& dprime,
                                 const VicinityKernel& k, double tau_unc,
                                 double leak_tol,
                                 const std::optional<std::filesystem::path>&
                                     dump_dir = {}) {
  const LabeledDensity hardened = harden(dprime);
  dump_density(dump_dir, "hardened", hardened);
  const LabeledDensity ddagger = convolve_distribution(hardened, k, leak_tol);
  dump_density(dump_dir, "ddagger", ddagger);
  const PosteriorField pf_dag = posterior(ddagger);
  const UncertaintyRegion region = uncertainty_region(pf_dag, tau_unc);
  dump_grid(dump_dir, "mask_kddagger", region.mask);

  const PosteriorField pf_prime = posterior(dprime);
  // First term: D'-evidence mass inside K_{D-dagger}. Second term: the D'
  // Bayes-error density outside it.
  const double inside = integrate_masked(pf_prime.evidence, region.mask);
  CompensatedSum outside;
  const auto sup = pf_prime.support.values();
  const auto mp = pf_prime.max_posterior.values();
  const auto ev = pf_prime.evidence.values();
  const auto mask = region.mask.values();
  for (std::size_t n = 0; n < sup.size(); ++n)
    if (sup[n] != 0.0 && mask[n] == 0.0) outside.add((1.0 - mp[n]) * ev[n]);
  return inside + outside.value() * dprime.spec().cell_area();
}

} // namespace detail

//! The Eq.-24 bound: convolve, harden, convolve again, then integrate the
//! D'-evidence over K_{D-dagger} plus the D' Bayes-error density outside it.
inline double zeta_d(const LabeledDensity& d, const VicinityKernel& k,
                     double tau_unc, double leak_tol = 1e-6) {
  const LabeledDensity dprime = convolve_distribution(d, k, leak_tol);
  return detail::zeta_d_from_dprime(dprime, k, tau_unc, leak_tol);
}

//! All bounds for one kernel. The convolution is shared between
//! beta_{D'}, zeta_sharp, and the zeta_D pipeline.
inline BoundsReport compute_bounds(const LabeledDensity& d, Norm norm,
                                   double epsilon,
                                   const BoundsOptions& opt = {}) {
  const GridSpec& spec = d.spec();
  const VicinityKernel kernel = build_kernel(norm, epsilon, spec.dx, spec.dy);

  BoundsReport r;
  r.epsilon = epsilon;
  r.norm = norm;
  r.tau_unc = opt.tau_unc;
  r.nx = spec.nx;
  r.ny = spec.ny;

  const PosteriorField pf = posterior(d);
  const UncertaintyRegion region = uncertainty_region(pf, opt.tau_unc);
  detail::dump_grid(opt.dump_dir, "evidence", pf.evidence);
  detail::dump_grid(opt.dump_dir, "mask_kd", region.mask);

  r.beta_d = bayes_error(pf);
  r.zeta_thm3 = region.mass;
  r.zeta_cor1 = cor1_lower(std::min(r.beta_d, 1.0 - 1.0 / d.num_classes()),
                           d.num_classes());
  r.zeta_cor2 = cor2_lower(d, kernel, opt.tau_unc, opt.p_min_override);

  const LabeledDensity dprime =
      convolve_distribution(d, kernel, opt.leak_tol);
  detail::dump_density(opt.dump_dir, "dprime", dprime);
  const PosteriorField pf_prime = posterior(dprime);
  detail::dump_grid(opt.dump_dir, "evidence_prime", pf_prime.evidence);
  r.beta_dprime = bayes_error(pf_prime);
  const UncertaintyRegion region_prime =
      uncertainty_region(pf_prime, opt.tau_unc);
  detail::dump_grid(opt.dump_dir, "mask_kdprime", region_prime.mask);
  r.zeta_sharp = region_prime.mass;
  r.zeta_d = detail::zeta_d_from_dprime(dprime, kernel, opt.tau_unc,
                                        opt.leak_tol, opt.dump_dir);
  return r;
}

//! One BoundsReport per epsilon; the list must be ascending and nonnegative.
inline std::vector<BoundsReport> epsilon_sweep(const LabeledDensity& d,
                                               Norm norm,
                                               std::span<const double> eps_list,
                                               const BoundsOptions& opt = {}) {
  if (eps_list.empty()) throw Error("epsilon_sweep: empty epsilon list");
  for (std::size_t n = 0; n < eps_list.size(); ++n) {
    if (eps_list[n] < 0.0)
      throw Error("epsilon_sweep: negative epsilon " +
                  std::to_string(eps_list[n]));
    if (n > 0 && eps_list[n] < eps_list[n - 1])
      throw Error("epsilon_sweep: epsilon list must be sorted ascending");
  }
  std::vector<BoundsReport> out;
  out.reserve(eps_list.size());
  BoundsOptions per_point = opt;
  for (double eps : eps_list) {
    if (opt.dump_dir)
      per_point.dump_dir = *opt.dump_dir / ("eps_" + std::to_string(eps));
    out.push_back(compute_bounds(d, norm, eps, per_point));
  }
  return out;
}

//! Sweep CSV: fixed column order, 9 significant digits.
inline void write_sweep_csv(std::ostream& os,
                            std::span<const BoundsReport> reports,
                            std::span<const std::string> comments = {}) {
  for (const auto& c : comments) os << "# " << c << "\n";
  os << "epsilon,norm,tau_unc,resolution,beta_D,beta_Dprime,zeta_thm3,"
        "zeta_cor1,zeta_cor2,zeta_sharp,zeta_D,ub_zeta_D\n";
  char buf[320];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf),
                  "%.9g,%s,%.9g,%dx%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  r.epsilon, norm_name(r.norm), r.tau_unc, r.nx, r.ny,
                  r.beta_d, r.beta_dprime, r.zeta_thm3, r.zeta_cor1,
                  r.zeta_cor2, r.zeta_sharp, r.zeta_d, r.ub_zeta_d());
    os << buf;
  }
}

inline void write_sweep_csv(const std::filesystem::path& path,
                            std::span<const BoundsReport> reports,
                            std::span<const std::string> comments = {}) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  write_sweep_csv(os, reports, comments);
  if (!os) throw IoError("write failed: " + path.string());
}

} // namespace rbound
