#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <unordered_map>
#include <vector>

#include "rbound/density.hpp"
#include "rbound/errors.hpp"
#include "rbound/grid.hpp"

namespace rbound {

//! Per-cell class labels; -1 marks cells outside the numerical support.
struct LabelGrid {
  static constexpr std::int32_t kOutOfSupport = -1;

  GridSpec spec;
  std::vector<std::int32_t> labels;

  std::int32_t at(int i, int j) const {
    return labels[static_cast<std::size_t>(j) * spec.nx + i];
  }
  std::int32_t& at(int i, int j) {
    return labels[static_cast<std::size_t>(j) * spec.nx + i];
  }
  //! Label of the cell containing (x, y); kOutOfSupport outside the domain.
  std::int32_t label_at(double x, double y) const {
    const int i = static_cast<int>(std::floor((x - spec.x0) / spec.dx));
    const int j = static_cast<int>(std::floor((y - spec.y0) / spec.dy));
    if (i < 0 || i >= spec.nx || j < 0 || j >= spec.ny) return kOutOfSupport;
    return at(i, j);
  }
};

//! Bayes posteriors of a LabeledDensity. Cells whose evidence falls below
//! tau_density = 1e-12 * max(evidence) are out of numerical support and are
//! excluded from all region and error integrals (this avoids 0/0 where the
//! evidence truly vanishes).
struct PosteriorField {
  std::vector<Grid2D> posteriors; //!< p(y=k|x); 0 outside support
  Grid2D evidence;                //!< p(x)
  Grid2D max_posterior;           //!< max_k p(y=k|x); 0 outside support
  Grid2D support;                 //!< 0/1 mask of evidence > tau_density
  LabelGrid argmax;               //!< argmax_k, ties to the lowest index
  double tau_density = 0.0;
};

inline PosteriorField posterior(const LabeledDensity& d) {
  const int num_classes = d.num_classes();
  const GridSpec& spec = d.spec();
  PosteriorField pf;
  pf.evidence = Grid2D(spec);
  pf.max_posterior = Grid2D(spec);
  pf.support = Grid2D(spec);
  pf.argmax.spec = spec;
  pf.argmax.labels.assign(spec.cell_count(), LabelGrid::kOutOfSupport);
  for (int k = 0; k < num_classes; ++k) pf.posteriors.emplace_back(spec);

  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      double e = 0.0;
      for (int k = 0; k < num_classes; ++k)
        e += d.priors[k] * d.conditionals[k].at(i, j);
      pf.evidence.at(i, j) = e;
    }
  pf.tau_density = 1e-12 * pf.evidence.max_value();

  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      const double e = pf.evidence.at(i, j);
      if (!(e > pf.tau_density)) continue;
      pf.support.at(i, j) = 1.0;
      // Ties (and FFT round-off masquerading as ties) go to the lowest
      // class index: a later class must beat the leader by a real margin.
      // The error integrals still see the exact maximum.
      const double tie_tol = 1e-9 * e;
      double max_joint = -1.0;
      double lead = -1.0;
      int best_k = 0;
      for (int k = 0; k < num_classes; ++k) {
        const double joint = d.priors[k] * d.conditionals[k].at(i, j);
        pf.posteriors[k].at(i, j) = joint / e;
        max_joint = std::max(max_joint, joint);
        if (joint > lead + tie_tol) {
          lead = joint;
          best_k = k;
        }
      }
      pf.max_posterior.at(i, j) = max_joint / e;
      pf.argmax.at(i, j) = best_k;
    }
  return pf;
}

//! Bayes error: integral of (1 - max_k p(y=k|x)) p(x) over the support.
inline double bayes_error(const PosteriorField& pf) {
  detail::CompensatedSum s;
  const auto sup = pf.support.values();
  const auto mp = pf.max_posterior.values();
  const auto ev = pf.evidence.values();
  for (std::size_t n = 0; n < sup.size(); ++n)
    if (sup[n] != 0.0) s.add((1.0 - mp[n]) * ev[n]);
  return s.value() * pf.evidence.spec().cell_area();
}

inline double bayes_error(const LabeledDensity& d) {
  return bayes_error(posterior(d));
}

//! The K_D set: cells whose maximum posterior stays below 1 - tau_unc,
//! together with its area and probability mass.
struct UncertaintyRegion {
  Grid2D mask;      //!< 0/1
  double volume = 0.0;
  double mass = 0.0;
  double tolerance = 0.0; //!< the tau_unc used
};

inline UncertaintyRegion uncertainty_region(const PosteriorField& pf,
                                            double tau_unc) {
  if (!(tau_unc >= 0.0) || tau_unc >= 0.5)
    throw Error("uncertainty_region: tau_unc must be in [0, 0.5)");
  UncertaintyRegion r;
  r.tolerance = tau_unc;
  r.mask = Grid2D(pf.evidence.spec());
  const auto sup = pf.support.values();
  const auto mp = pf.max_posterior.values();
  const auto ev = pf.evidence.values();
  auto mask = r.mask.values();
  detail::CompensatedSum vol, mass;
  const double cutoff = 1.0 - tau_unc;
  for (std::size_t n = 0; n < sup.size(); ++n) {
    if (sup[n] != 0.0 && mp[n] < cutoff) {
      mask[n] = 1.0;
      vol.add(1.0);
      mass.add(ev[n]);
    }
  }
  const double cell = pf.evidence.spec().cell_area();
  r.volume = vol.value() * cell;
  r.mass = mass.value() * cell;
  return r;
}

inline UncertaintyRegion uncertainty_region(const LabeledDensity& d,
                                            double tau_unc) {
  return uncertainty_region(posterior(d), tau_unc);
}

//! The Bayes classifier as a label grid: per-cell argmax of the posterior,
//! ties broken toward the lowest class index.
inline LabelGrid bayes_classifier(const LabeledDensity& d) {
  return posterior(d).argmax;
}

namespace detail {

struct PointKey {
  double x, y;
  bool operator==(const PointKey&) const = default;
};

struct PointKeyHash {
  std::size_t operator()(const PointKey& p) const {
    std::uint64_t a, b;
    static_assert(sizeof(a) == sizeof(p.x));
    std::memcpy(&a, &p.x, sizeof(a));
    std::memcpy(&b, &p.y, sizeof(b));
    std::uint64_t h = a * 0x9E3779B97F4A7C15ull;
    h ^= b + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

} // namespace detail

//! True iff some exact input point carries at least two distinct labels
//! (the condition under which a finite data set induces a nonzero Bayes
//! error).
inline bool duplicated_input_check(const SampleSet& s) {
  s.validate();
  std::unordered_map<detail::PointKey, int, detail::PointKeyHash> seen;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const detail::PointKey key{s.points[n][0], s.points[n][1]};
    auto [it, inserted] = seen.emplace(key, s.labels[n]);
    if (!inserted && it->second != s.labels[n]) return true;
  }
  return false;
}

} // namespace rbound
