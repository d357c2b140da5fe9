#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <unordered_map>
#include <vector>

#include "rbound/bayes.hpp"
#include "rbound/density.hpp"
#include "rbound/errors.hpp"
#include "rbound/sampling.hpp"
#include "rbound/vicinity.hpp"

namespace rbound {

//! Result of the neighbor-correctness evaluation. alpha counts an empty
//! neighborhood as NOT robustly correct; alpha_vacuous counts it as a
//! (vacuous) pass, which is what a literal C_i == N_i comparison does at
//! N_i = 0. Both are reported so vacuous passes never inflate a result
//! silently.
struct NeighborStats {
  double alpha = 0.0;
  double alpha_vacuous = 0.0;
  std::size_t empty_neighborhoods = 0;
  std::size_t num_test = 0;
};

namespace detail {

//! Uniform spatial hash over square buckets of width theta; Chebyshev
//! neighbors of a point are confined to its 3x3 bucket neighborhood.
class ChebyshevIndex {
public:
  ChebyshevIndex(const SampleSet& ref, double theta)
    : ref_(ref), theta_(theta) {
    buckets_.reserve(ref.size());
    for (std::size_t n = 0; n < ref.size(); ++n)
      buckets_[key_of(ref.points[n][0], ref.points[n][1])].push_back(n);
  }

  //! Visit every reference index within Chebyshev distance theta of (x, y).
  template <class Visitor>
  bool visit(double x, double y, Visitor&& visit) const {
    bool keep_going = true;
    const std::int64_t bx = bucket_coord(x);
    const std::int64_t by = bucket_coord(y);
    for (std::int64_t dj = -1; dj <= 1 && keep_going; ++dj)
      for (std::int64_t di = -1; di <= 1 && keep_going; ++di) {
        const auto it = buckets_.find(pack(bx + di, by + dj));
        if (it == buckets_.end()) continue;
        for (std::size_t n : it->second) {
          const double dx = std::abs(ref_.points[n][0] - x);
          const double dy = std::abs(ref_.points[n][1] - y);
          if (std::max(dx, dy) <= theta_) {
            if (!visit(n)) {
              keep_going = false;
              break;
            }
          }
        }
      }
    return keep_going;
  }

private:
  std::int64_t bucket_coord(double v) const {
    if (theta_ <= 0.0) {
      // theta = 0 keeps only exact coordinate matches; bucket on the bits
      // (with -0.0 folded into +0.0 so equal values share a bucket).
      if (v == 0.0) v = 0.0;
      std::int64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      return bits;
    }
    return static_cast<std::int64_t>(std::floor(v / theta_));
  }

  static std::uint64_t pack(std::int64_t a, std::int64_t b) {
    const std::uint64_t ua = static_cast<std::uint64_t>(a) * 0x9E3779B97F4A7C15ull;
    return ua ^ (static_cast<std::uint64_t>(b) + (ua << 13) + (ua >> 7));
  }

  std::uint64_t key_of(double x, double y) const {
    return pack(bucket_coord(x), bucket_coord(y));
  }

  const SampleSet& ref_;
  double theta_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

} // namespace detail

//! Neighbor correctness with separate test and reference sets: a test point
//! is robustly correct iff every reference point within Chebyshev distance
//! theta is predicted with its own label (and, for alpha, at least one such
//! neighbor exists at all).
inline NeighborStats neighbor_correctness(const SampleSet& test,
                                          const SampleSet& reference,
                                          std::span<const int> predictions,
                                          double theta) {
  test.validate();
  reference.validate();
  if (predictions.size() != reference.size())
    throw Error("neighbor_correctness: got " +
                std::to_string(predictions.size()) + " predictions for " +
                std::to_string(reference.size()) + " reference samples");
  if (theta < 0.0) throw Error("neighbor_correctness: theta must be >= 0");

  const detail::ChebyshevIndex index(reference, theta);
  std::size_t strict = 0, vacuous = 0, empty = 0;
  for (std::size_t t = 0; t < test.size(); ++t) {
    bool found = false;
    bool all_correct = true;
    index.visit(test.points[t][0], test.points[t][1], [&](std::size_t n) {
      found = true;
      if (predictions[n] != reference.labels[n]) {
        all_correct = false;
        return false; // one failing neighbor settles this test point
      }
      return true;
    });
    if (!found) {
      ++empty;
      ++vacuous; // C_i == N_i holds vacuously at N_i = 0
    } else if (all_correct) {
      ++strict;
      ++vacuous;
    }
  }
  NeighborStats r;
  r.num_test = test.size();
  r.empty_neighborhoods = empty;
  if (!test.size()) return r;
  r.alpha = static_cast<double>(strict) / test.size();
  r.alpha_vacuous = static_cast<double>(vacuous) / test.size();
  return r;
}

//! Single-set variant: reference = test, so every point is its own neighbor
//! (distance 0) and no neighborhood is empty.
inline NeighborStats neighbor_correctness_self(const SampleSet& s,
                                               std::span<const int> predictions,
                                               double theta) {
  return neighbor_correctness(s, s, predictions, theta);
}

//! Monte-Carlo estimate of E_x[ prod_{i<=n} max_k p(y=k | x_i) ] with
//! x drawn from the evidence and the x_i uniform in the vicinity of x.
//! Out-of-support x_i contribute a factor 1 (no example can occur there).
//! Per-trial counter-based streams make the result independent of execution
//! order; identical seeds give bit-identical estimates.
inline double all_correct_probability(const LabeledDensity& d,
                                      const VicinityKernel& k, int n_samples,
                                      int trials, std::uint64_t seed) {
  if (n_samples < 0) throw Error("all_correct_probability: n_samples < 0");
  if (trials < 1) throw Error("all_correct_probability: trials must be >= 1");
  if (n_samples == 0) return 1.0;

  const PosteriorField pf = posterior(d);
  const GridSampler sampler(pf.evidence);
  detail::CompensatedSum acc;
  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    const auto x = sampler.sample(rng);
    double prod = 1.0;
    for (int i = 0; i < n_samples; ++i) {
      const auto off = sample_in_ball(rng, k.norm, k.epsilon);
      const double mp = pf.max_posterior.value_at(x[0] + off[0], x[1] + off[1]);
      if (mp > 0.0) prod *= mp; // 0 marks out-of-support cells
    }
    acc.add(prod);
  }
  return acc.value() / trials;
}

} // namespace rbound
