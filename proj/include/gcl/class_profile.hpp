#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gcl/errors.hpp"

namespace gcl {

/// Per-class sample counts of a long-tailed training set, in class-index
/// order. Sortedness is not assumed anywhere downstream.
struct ClassProfile {
  std::vector<std::size_t> counts;

  std::size_t num_classes() const { return counts.size(); }
  std::size_t total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  }
  std::size_t n_max() const { return *std::max_element(counts.begin(), counts.end()); }
  std::size_t n_min() const { return *std::min_element(counts.begin(), counts.end()); }
  double imbalance() const {
    return static_cast<double>(n_max()) / static_cast<double>(n_min());
  }

  void validate() const {
    if (counts.empty()) throw InvalidArgument("ClassProfile: no classes");
    for (std::size_t c : counts)
      if (c < 1) throw InvalidArgument("ClassProfile: every class needs at least one sample");
  }
};

inline double round_half_up(double x) { return std::floor(x + 0.5); }

/// Long-tailed profile with counts n_i = round(n_max * lambda^i),
/// lambda = r^(-1/(C-1)). Endpoints are pinned after rounding so that
/// counts[0] == n_max and counts[C-1] == round(n_max / r), keeping the
/// realized imbalance ratio honest at the extremes.
inline ClassProfile exponential_profile(std::size_t n_max, double r, std::size_t num_classes) {
  if (num_classes < 2) throw InvalidArgument("exponential_profile: need at least 2 classes");
  if (!(r >= 1.0)) throw InvalidArgument("exponential_profile: imbalance ratio must be >= 1");
  if (static_cast<double>(n_max) / r < 1.0)
    throw InvalidArgument("exponential_profile: tail class would round to zero (n_max < r)");

  const double lambda = std::pow(r, -1.0 / static_cast<double>(num_classes - 1));
  ClassProfile profile;
  profile.counts.resize(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i) {
    const double raw = static_cast<double>(n_max) * std::pow(lambda, static_cast<double>(i));
    profile.counts[i] = static_cast<std::size_t>(round_half_up(raw));
  }
  profile.counts.front() = n_max;
  profile.counts.back() =
      static_cast<std::size_t>(round_half_up(static_cast<double>(n_max) / r));
  profile.validate();
  return profile;
}

}  // namespace gcl
