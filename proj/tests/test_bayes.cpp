#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <unordered_map>

#include "rbound/bayes.hpp"
#include "rbound/density.hpp"
#include "rbound/grid.hpp"
#include "rbound/sampling.hpp"

using namespace rbound;

namespace {

// shared fixtures
GridSpec squares_spec() {
  const double cell = 1.0 / 128;
  return GridSpec{-0.5, -0.5, cell, cell, 320, 256};
}

LabeledDensity overlapping_squares() {
  return make_uniform_patches({0.5, 0.5},
                              {Rect{0, 0, 1, 1}, Rect{0.5, 0, 1.5, 1}},
                              squares_spec());
}

LabeledDensity disjoint_squares() {
  return make_uniform_patches({0.5, 0.5},
                              {Rect{-0.25, 0, 0.25, 1}, Rect{1, 0, 1.5, 1}},
                              squares_spec());
}

LabeledDensity two_gaussians(int n = 256) {
  GridSpec spec{-7, -7, 14.0 / n, 14.0 / n, n, n};
  return make_gaussian_mixture({0.5, 0.5}, {{-1.0, 0.0}, {1.0, 0.0}},
                               {1.0, 1.0}, spec);
}

//! Bayes error of the empirical point-mass distribution of a finite set.
double empirical_bayes_error(const SampleSet& s) {
  std::unordered_map<detail::PointKey, std::unordered_map<int, int>,
                     detail::PointKeyHash>
      groups;
  for (std::size_t n = 0; n < s.size(); ++n)
    ++groups[detail::PointKey{s.points[n][0], s.points[n][1]}][s.labels[n]];
  double err = 0.0;
  for (const auto& [key, counts] : groups) {
    int total = 0, best = 0;
    for (const auto& [label, c] : counts) {
      total += c;
      best = std::max(best, c);
    }
    err += total - best;
  }
  return err / s.size();
}

} // namespace

TEST_CASE("posterior: identical conditionals, equal priors") {
  GridSpec spec{-4, -4, 8.0 / 128, 8.0 / 128, 128, 128};
  const LabeledDensity d = make_gaussian_mixture(
      {0.5, 0.5}, {{0.0, 0.0}, {0.0, 0.0}}, {0.8, 0.8}, spec);
  const PosteriorField pf = posterior(d);
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i)
      if (pf.support.at(i, j) != 0.0) {
        REQUIRE(pf.posteriors[0].at(i, j) == Catch::Approx(0.5).margin(1e-12));
        REQUIRE(pf.posteriors[1].at(i, j) == Catch::Approx(0.5).margin(1e-12));
      }
}

TEST_CASE("posterior: degenerate prior makes one class certain") {
  GridSpec spec{-4, -4, 8.0 / 64, 8.0 / 64, 64, 64};
  LabeledDensity d = make_gaussian_mixture({0.5, 0.5}, {{0.0, 0.0}, {0.5, 0.0}},
                                           {0.8, 0.8}, spec);
  d.priors = {1.0, 0.0};
  const PosteriorField pf = posterior(d);
  for (std::size_t n = 0; n < pf.support.values().size(); ++n)
    if (pf.support.values()[n] != 0.0)
      REQUIRE(pf.posteriors[0].values()[n] == 1.0);
}

TEST_CASE("posterior: overlapping squares geometry") {
  const PosteriorField pf = posterior(overlapping_squares());
  const auto at = [&](const Grid2D& g, double x, double y) {
    return g.value_at(x, y);
  };
  REQUIRE(at(pf.posteriors[0], 0.25, 0.5) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(at(pf.posteriors[1], 0.25, 0.5) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(at(pf.posteriors[0], 0.75, 0.5) == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(at(pf.posteriors[1], 0.75, 0.5) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("property: posteriors sum to 1 on the support") {
  GridSpec spec{-6, -6, 12.0 / 96, 12.0 / 96, 96, 96};
  const LabeledDensity d = make_gaussian_mixture(
      {0.2, 0.5, 0.3}, {{-1.5, 0.0}, {1.0, 1.0}, {0.5, -1.5}},
      {0.5, 0.7, 0.4}, spec);
  const PosteriorField pf = posterior(d);
  for (std::size_t n = 0; n < pf.support.values().size(); ++n) {
    if (pf.support.values()[n] == 0.0) continue;
    double total = 0.0;
    for (const auto& p : pf.posteriors) total += p.values()[n];
    REQUIRE(total == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("bayes_error: disjoint supports have no error") {
  REQUIRE(bayes_error(disjoint_squares()) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("bayes_error: identical conditionals give 1/2") {
  GridSpec spec{-4, -4, 8.0 / 128, 8.0 / 128, 128, 128};
  const LabeledDensity d = make_gaussian_mixture(
      {0.5, 0.5}, {{0.0, 0.0}, {0.0, 0.0}}, {0.8, 0.8}, spec);
  REQUIRE(bayes_error(d) == Catch::Approx(0.5).margin(1e-6));
}

TEST_CASE("bayes_error: two unit Gaussians at distance 2 hit Phi(-1)") {
  // closed form: beta = Phi(-d/2) = Phi(-1)
  const double phi_minus_1 = 0.15865525393145707;
  REQUIRE(bayes_error(two_gaussians()) ==
          Catch::Approx(phi_minus_1).margin(1e-3));
}

TEST_CASE("bayes_error: overlapping squares give 1/4") {
  REQUIRE(bayes_error(overlapping_squares()) ==
          Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("property: beta is invariant under class relabeling") {
  GridSpec spec{-6, -6, 12.0 / 96, 12.0 / 96, 96, 96};
  const LabeledDensity d = make_gaussian_mixture(
      {0.2, 0.5, 0.3}, {{-1.5, 0.0}, {1.0, 1.0}, {0.5, -1.5}},
      {0.5, 0.7, 0.4}, spec);
  LabeledDensity permuted;
  permuted.priors = {d.priors[2], d.priors[0], d.priors[1]};
  permuted.conditionals = {d.conditionals[2], d.conditionals[0],
                           d.conditionals[1]};
  REQUIRE(bayes_error(permuted) == Catch::Approx(bayes_error(d)).margin(1e-12));
}

TEST_CASE("uncertainty_region: empty for disjoint supports") {
  const UncertaintyRegion r = uncertainty_region(disjoint_squares(), 1e-3);
  REQUIRE(r.mass == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(r.volume == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("uncertainty_region: overlapping squares strip") {
  const UncertaintyRegion r = uncertainty_region(overlapping_squares(), 1e-3);
  REQUIRE(r.mass == Catch::Approx(0.5).margin(1e-6));
  REQUIRE(r.volume == Catch::Approx(0.5).margin(1e-6));
}

TEST_CASE("uncertainty_region: full-support mixture at tau = 0") {
  const UncertaintyRegion r = uncertainty_region(two_gaussians(), 0.0);
  REQUIRE(r.mass > 0.99);
}

TEST_CASE("uncertainty_region: rejects tau outside [0, 0.5)") {
  REQUIRE_THROWS_AS(uncertainty_region(two_gaussians(128), 0.5), Error);
  REQUIRE_THROWS_AS(uncertainty_region(two_gaussians(128), -0.1), Error);
}

TEST_CASE("property: beta never exceeds the K_D mass") {
  for (const LabeledDensity& d :
       {overlapping_squares(), two_gaussians(), disjoint_squares()}) {
    const PosteriorField pf = posterior(d);
    REQUIRE(bayes_error(pf) <= uncertainty_region(pf, 0.0).mass + 1e-9);
  }
}

TEST_CASE("bayes_classifier: degenerate prior labels everything 0") {
  GridSpec spec{-4, -4, 8.0 / 64, 8.0 / 64, 64, 64};
  LabeledDensity d = make_gaussian_mixture({0.5, 0.5}, {{0.0, 0.0}, {0.5, 0.0}},
                                           {0.8, 0.8}, spec);
  d.priors = {1.0, 0.0};
  const LabelGrid labels = bayes_classifier(d);
  for (std::int32_t l : labels.labels) REQUIRE((l == 0 || l == LabelGrid::kOutOfSupport));
}

TEST_CASE("bayes_classifier: exact ties resolve to the lowest class") {
  const LabelGrid labels = bayes_classifier(overlapping_squares());
  REQUIRE(labels.label_at(0.75, 0.5) == 0); // inside the 50/50 overlap strip
  REQUIRE(labels.label_at(0.25, 0.5) == 0);
  REQUIRE(labels.label_at(1.25, 0.5) == 1);
  REQUIRE(labels.label_at(-0.4, -0.4) == LabelGrid::kOutOfSupport);
}

TEST_CASE("bayes_classifier: decision boundary of the two-Gaussian fixture") {
  const LabelGrid labels = bayes_classifier(two_gaussians());
  REQUIRE(labels.label_at(-0.5, 0.0) == 0);
  REQUIRE(labels.label_at(0.5, 0.0) == 1);
  REQUIRE(labels.label_at(-2.0, 1.0) == 0);
  REQUIRE(labels.label_at(2.0, -1.0) == 1);
}

TEST_CASE("duplicated_input_check") {
  SampleSet clean;
  clean.points = {{0, 0}, {1, 1}};
  clean.labels = {0, 1};
  REQUIRE_FALSE(duplicated_input_check(clean));

  SampleSet dup;
  dup.points = {{0, 0}, {0, 0}};
  dup.labels = {0, 1};
  REQUIRE(duplicated_input_check(dup));

  SampleSet same_label;
  same_label.points = {{0, 0}, {0, 0}};
  same_label.labels = {1, 1};
  REQUIRE_FALSE(duplicated_input_check(same_label));
}

TEST_CASE("duplicate-free sets induce zero empirical Bayes error") {
  auto rng = make_rng(5150);
  SampleSet s = sample_moons(500, MoonsParams{0.25, 64}, rng);
  REQUIRE_FALSE(duplicated_input_check(s));
  REQUIRE(empirical_bayes_error(s) == 0.0);

  // and the converse: one duplicated input with conflicting labels
  s.points.push_back(s.points[0]);
  s.labels.push_back(1 - s.labels[0]);
  REQUIRE(duplicated_input_check(s));
  REQUIRE(empirical_bayes_error(s) > 0.0);
}
