#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gcl/class_profile.hpp"
#include "gcl/errors.hpp"
#include "gcl/rng.hpp"

namespace gcl {

/// Re-balancing strategies. Per-sample draw weights:
///   instance-balanced  1
///   square-root        n_j^(-1/2)
///   class-balanced     n_j^(-1)
///   effective-number   1 / n_en(j, beta)
enum class SamplerKind { instance_balanced, square_root, class_balanced, effective_number };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::class_balanced;
  double beta = 0.9999;  // effective-number only, must lie in [0, 1)

  void validate() const {
    if (kind == SamplerKind::effective_number && !(beta >= 0.0 && beta < 1.0))
      throw InvalidArgument("SamplerSpec: beta must lie in [0, 1)");
  }

  /// Strings: "ibs" | "srs" | "cbs" | "ens:<beta>".
  static SamplerSpec parse(const std::string& s) {
    SamplerSpec spec;
    if (s == "ibs") {
      spec.kind = SamplerKind::instance_balanced;
    } else if (s == "srs") {
      spec.kind = SamplerKind::square_root;
    } else if (s == "cbs") {
      spec.kind = SamplerKind::class_balanced;
    } else if (s.rfind("ens:", 0) == 0) {
      spec.kind = SamplerKind::effective_number;
      try {
        spec.beta = std::stod(s.substr(4));
      } catch (const std::exception&) {
        throw ConfigError("sampler: cannot parse beta in '" + s + "'");
      }
      if (!(spec.beta >= 0.0 && spec.beta < 1.0))
        throw ConfigError("sampler: beta must lie in [0, 1), got " + s.substr(4));
    } else {
      throw ConfigError("sampler: unknown kind '" + s + "' (expected ibs, srs, cbs, ens:<beta>)");
    }
    return spec;
  }

  std::string name() const {
    switch (kind) {
      case SamplerKind::instance_balanced: return "ibs";
      case SamplerKind::square_root: return "srs";
      case SamplerKind::class_balanced: return "cbs";
      case SamplerKind::effective_number: return "ens:" + std::to_string(beta);
    }
    return "?";
  }
};

/// Effective class sizes (1 - beta^n_j) / (1 - beta). The constant dataset
/// factor that sometimes multiplies this quantity is dropped: it cancels when
/// the weights are normalized into probabilities.
inline std::vector<double> effective_numbers(const ClassProfile& profile, double beta) {
  profile.validate();
  if (!(beta >= 0.0 && beta < 1.0))
    throw InvalidArgument("effective_numbers: beta must lie in [0, 1)");
  std::vector<double> out(profile.num_classes());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double n = static_cast<double>(profile.counts[j]);
    out[j] = beta == 0.0 ? 1.0 : (1.0 - std::pow(beta, n)) / (1.0 - beta);
  }
  return out;
}

/// Per-sample draw probabilities of length N = sum(counts). All samples of a
/// class share one probability; the sequence sums to 1.
struct SampleProbabilities {
  std::vector<double> per_sample;
  std::size_t size() const { return per_sample.size(); }
};

/// Unnormalized per-sample weight for each class under spec.
inline std::vector<double> per_class_sample_weights(const ClassProfile& profile,
                                                    const SamplerSpec& spec) {
  profile.validate();
  spec.validate();
  std::vector<double> w(profile.num_classes());
  std::vector<double> en;
  if (spec.kind == SamplerKind::effective_number) en = effective_numbers(profile, spec.beta);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double n = static_cast<double>(profile.counts[j]);
    switch (spec.kind) {
      case SamplerKind::instance_balanced: w[j] = 1.0; break;
      case SamplerKind::square_root: w[j] = 1.0 / std::sqrt(n); break;
      case SamplerKind::class_balanced: w[j] = 1.0 / n; break;
      case SamplerKind::effective_number: w[j] = 1.0 / en[j]; break;
    }
  }
  return w;
}

namespace detail {
inline SampleProbabilities normalize_per_sample(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return SampleProbabilities{std::move(weights)};
}
}  // namespace detail

/// Probabilities with samples laid out grouped by class, in class-index
/// order (the canonical layout for profile-only callers).
inline SampleProbabilities sampling_probabilities(const ClassProfile& profile,
                                                  const SamplerSpec& spec) {
  auto class_w = per_class_sample_weights(profile, spec);
  std::vector<double> weights;
  weights.reserve(profile.total());
  for (std::size_t j = 0; j < profile.num_classes(); ++j)
    weights.insert(weights.end(), profile.counts[j], class_w[j]);
  return detail::normalize_per_sample(std::move(weights));
}

/// Probabilities aligned with an existing dataset ordering.
inline SampleProbabilities sampling_probabilities(const ClassProfile& profile,
                                                  const SamplerSpec& spec,
                                                  const std::vector<std::size_t>& labels) {
  auto class_w = per_class_sample_weights(profile, spec);
  std::vector<double> weights(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_w.size()) throw InvalidArgument("sampling_probabilities: bad label");
    weights[i] = class_w[labels[i]];
  }
  return detail::normalize_per_sample(std::move(weights));
}

/// b indices drawn according to probs; i.i.d. with replacement by default.
/// Without replacement each drawn index is removed and the remainder
/// renormalized (sequential weighted sampling), requiring b <= N.
inline std::vector<std::size_t> draw_batch(const SampleProbabilities& probs, std::size_t b,
                                           Rng& rng, bool replacement = true) {
  const std::size_t n = probs.size();
  if (b < 1) throw InvalidArgument("draw_batch: batch size must be >= 1");
  if (n == 0) throw InvalidArgument("draw_batch: empty probability vector");
  if (!replacement && b > n)
    throw InvalidArgument("draw_batch: batch exceeds population without replacement");

  std::vector<std::size_t> out;
  out.reserve(b);

  if (replacement) {
    std::vector<double> cdf(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += probs.per_sample[i];
      cdf[i] = acc;
    }
    for (std::size_t k = 0; k < b; ++k) {
      const double u = rng.uniform() * acc;
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      out.push_back(it == cdf.end() ? n - 1 : static_cast<std::size_t>(it - cdf.begin()));
    }
  } else {
    std::vector<double> w = probs.per_sample;
    double total = 1.0;
    for (std::size_t k = 0; k < b; ++k) {
      double u = rng.uniform() * total;
      std::size_t pick = n - 1;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += w[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
      out.push_back(pick);
      total -= w[pick];
      w[pick] = 0.0;
    }
  }
  return out;
}

}  // namespace gcl
