#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gcl/class_profile.hpp"
#include "gcl/errors.hpp"
#include "gcl/matrix.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// ---------------------------------------------------------------------------
// Loss families over a cosine classifier.
//
// All margin/cloud families operate on cosine scores cos(theta_ij) between
// feature i and class anchor j, scaled by a constant s. Cross-entropy is the
// odd one out: it consumes raw dot-product logits and applies no adjustment.
//
//   ce              z = f . w_j                        (raw, pass-through)
//   cosface:<m>     z_y = s (cos - m), others s cos    (fixed cosine margin)
//   arcface-style:m z_y = s cos(theta + m)             (fixed angular margin)
//   ldam:<max>      z_y = s (cos - m_j),
//                   m_j = max * n_j^(-1/4) / max_i n_i^(-1/4)
//   gcl-e           z_j = s (cos - delta_j |eps|)      (clouded, Euclidean)
//   gcl-a           z_j = s cos(theta + delta_j * angular_scale * |eps|)
//
// delta_j are normalized cloud sizes from the schedule (1 for the rarest
// class, 0 or small for the most frequent). eps is a clamped Gaussian draw,
// one per sample, shared across classes; |eps| makes the perturbation a
// one-sided push away from the anchor, which is the useful direction (points
// that sit farther from the anchor than the sample must still classify
// correctly). A per-class draw variant exists behind a config flag.
//
// Noise is treated as a constant in the backward pass and is disabled
// entirely at evaluation time, along with every margin.
// ---------------------------------------------------------------------------

enum class LossFamily { cross_entropy, cosine_margin, angular_margin, ldam, gcl_e, gcl_a };

struct GaussianCloudConfig {
  double mu = 0.0;
  double sigma = 1.0 / 3.0;    // 3-sigma of the draw spans the clamp range
  double clamp_lo = -1.0;
  double clamp_hi = 1.0;
  double angular_scale = std::numbers::pi / 2.0;  // gcl-a only
  double scale = 30.0;                            // the constant s
  bool per_class_draw = false;                    // draw eps per (sample, class)

  void validate() const {
    if (!(sigma > 0.0)) throw InvalidArgument("cloud config: sigma must be > 0");
    if (!(clamp_lo < clamp_hi)) throw InvalidArgument("cloud config: empty clamp range");
    if (!(angular_scale > 0.0)) throw InvalidArgument("cloud config: angular_scale must be > 0");
    if (!(scale > 0.0)) throw InvalidArgument("cloud config: scale must be > 0");
  }
};

struct LossSpec {
  LossFamily family = LossFamily::gcl_e;
  double margin = 0.35;          // cosface / arcface-style
  double ldam_max_margin = 0.5;  // ldam
  GaussianCloudConfig cloud;
  std::vector<double> cloud_sizes;  // normalized delta_j, gcl families only

  bool is_gcl() const { return family == LossFamily::gcl_e || family == LossFamily::gcl_a; }
  bool uses_cosine() const { return family != LossFamily::cross_entropy; }

  /// Family strings: "ce" | "cosface:<m>" | "arcface-style:<m>" |
  /// "ldam:<max_margin>" | "gcl-e" | "gcl-a". Parameters may be omitted to
  /// take the defaults.
  static LossSpec parse(const std::string& s) {
    LossSpec spec;
    auto param = [&](const std::string& prefix) -> double {
      const std::string arg = s.substr(prefix.size());
      try {
        return std::stod(arg);
      } catch (const std::exception&) {
        throw ConfigError("loss: cannot parse parameter in '" + s + "'");
      }
    };
    if (s == "ce") {
      spec.family = LossFamily::cross_entropy;
    } else if (s == "gcl-e") {
      spec.family = LossFamily::gcl_e;
    } else if (s == "gcl-a") {
      spec.family = LossFamily::gcl_a;
    } else if (s == "cosface") {
      spec.family = LossFamily::cosine_margin;
    } else if (s.rfind("cosface:", 0) == 0) {
      spec.family = LossFamily::cosine_margin;
      spec.margin = param("cosface:");
    } else if (s == "arcface-style") {
      spec.family = LossFamily::angular_margin;
    } else if (s.rfind("arcface-style:", 0) == 0) {
      spec.family = LossFamily::angular_margin;
      spec.margin = param("arcface-style:");
    } else if (s == "ldam") {
      spec.family = LossFamily::ldam;
    } else if (s.rfind("ldam:", 0) == 0) {
      spec.family = LossFamily::ldam;
      spec.ldam_max_margin = param("ldam:");
    } else {
      throw ConfigError("loss: unknown family '" + s + "'");
    }
    if (spec.margin < 0.0) throw ConfigError("loss: margin must be >= 0");
    if (spec.ldam_max_margin < 0.0) throw ConfigError("loss: ldam max margin must be >= 0");
    return spec;
  }

  std::string name() const {
    switch (family) {
      case LossFamily::cross_entropy: return "ce";
      case LossFamily::cosine_margin: return "cosface:" + std::to_string(margin);
      case LossFamily::angular_margin: return "arcface-style:" + std::to_string(margin);
      case LossFamily::ldam: return "ldam:" + std::to_string(ldam_max_margin);
      case LossFamily::gcl_e: return "gcl-e";
      case LossFamily::gcl_a: return "gcl-a";
    }
    return "?";
  }
};

/// Margins m_j for ldam, scaled so the rarest class gets exactly max_margin.
inline std::vector<double> ldam_margins(const ClassProfile& profile, double max_margin) {
  profile.validate();
  std::vector<double> m(profile.num_classes());
  double largest = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    m[j] = std::pow(static_cast<double>(profile.counts[j]), -0.25);
    largest = std::max(largest, m[j]);
  }
  for (double& v : m) v = max_margin * v / largest;
  return m;
}

// ---------------------------------------------------------------------------
// Cosine scores and their backward pass.
// ---------------------------------------------------------------------------

struct CosineCache {
  DenseMatrix unit_features;  // batch x D
  DenseMatrix unit_anchors;   // D x C
  DenseVector feature_norms;  // batch
  DenseVector anchor_norms;   // C
  DenseMatrix cos_scores;     // batch x C, clamped into [-1, 1]
};

inline CosineCache cosine_scores_cached(const DenseMatrix& features, const DenseMatrix& anchors) {
  check_shape(features.cols() == anchors.rows(), "cosine_scores feature/anchor dims");
  CosineCache cache;
  const std::size_t batch = features.rows(), dim = features.cols(), classes = anchors.cols();

  cache.feature_norms.resize(batch);
  cache.unit_features = DenseMatrix(batch, dim);
  for (std::size_t i = 0; i < batch; ++i) {
    const double n = l2_norm(features.row_ptr(i), dim);
    if (n == 0.0) throw InvalidArgument("cosine_scores: zero-norm feature row");
    cache.feature_norms[i] = n;
    for (std::size_t d = 0; d < dim; ++d) cache.unit_features(i, d) = features(i, d) / n;
  }

  cache.anchor_norms.resize(classes);
  cache.unit_anchors = DenseMatrix(dim, classes);
  for (std::size_t j = 0; j < classes; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) acc += anchors(d, j) * anchors(d, j);
    const double n = std::sqrt(acc);
    if (n == 0.0) throw InvalidArgument("cosine_scores: zero-norm class anchor");
    cache.anchor_norms[j] = n;
    for (std::size_t d = 0; d < dim; ++d) cache.unit_anchors(d, j) = anchors(d, j) / n;
  }

  cache.cos_scores = matmul(cache.unit_features, cache.unit_anchors);
  for (double& v : cache.cos_scores.data()) v = std::clamp(v, -1.0, 1.0);
  return cache;
}

/// Entry (i, j) = <f_i, w_j> / (|f_i| |w_j|), clamped into [-1, 1].
inline DenseMatrix cosine_scores(const DenseMatrix& features, const DenseMatrix& anchors) {
  return cosine_scores_cached(features, anchors).cos_scores;
}

struct CosineGrads {
  DenseMatrix dfeatures;  // batch x D
  DenseMatrix danchors;   // D x C
};

/// Jacobian of the row/column normalization:
///   dcos_ij/df_i = (v_j - cos_ij u_i) / |f_i|
///   dcos_ij/dw_j = (u_i - cos_ij v_j) / |w_j|
inline CosineGrads cosine_scores_backward(const CosineCache& cache, const DenseMatrix& dcos) {
  check_shape(dcos.same_shape(cache.cos_scores), "cosine_scores_backward upstream gradient");
  const std::size_t batch = dcos.rows(), classes = dcos.cols(), dim = cache.unit_features.cols();

  CosineGrads grads;
  grads.dfeatures = matmul_transB(dcos, cache.unit_anchors);  // (b x C) * (C x D)
  for (std::size_t i = 0; i < batch; ++i) {
    double rowdot = 0.0;
    for (std::size_t j = 0; j < classes; ++j) rowdot += dcos(i, j) * cache.cos_scores(i, j);
    const double inv = 1.0 / cache.feature_norms[i];
    for (std::size_t d = 0; d < dim; ++d)
      grads.dfeatures(i, d) = (grads.dfeatures(i, d) - rowdot * cache.unit_features(i, d)) * inv;
  }

  grads.danchors = matmul_transA(cache.unit_features, dcos);  // (D x b) * (b x C)
  for (std::size_t j = 0; j < classes; ++j) {
    double coldot = 0.0;
    for (std::size_t i = 0; i < batch; ++i) coldot += dcos(i, j) * cache.cos_scores(i, j);
    const double inv = 1.0 / cache.anchor_norms[j];
    for (std::size_t d = 0; d < dim; ++d)
      grads.danchors(d, j) = (grads.danchors(d, j) - coldot * cache.unit_anchors(d, j)) * inv;
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Logit adjustment.
// ---------------------------------------------------------------------------

/// Adjusted logits plus everything the backward pass and reproducibility
/// need: the applied |eps| draws and the pre-adjustment scores.
struct PerturbedLogits {
  DenseMatrix logits;   // batch x C
  DenseMatrix epsilon;  // batch x 1 (shared draw) or batch x C (per-class); empty if unused
  DenseMatrix scores;   // saved input scores (cosine, or raw for ce)
  bool training = false;
};

namespace detail {

// Angles are recovered from cosine values clamped a hair inside [-1, 1] so
// sin(theta) never vanishes in the chain rule.
constexpr double kPoleClamp = 1e-12;

inline double clamp_for_trig(double c) {
  return std::clamp(c, -1.0 + kPoleClamp, 1.0 - kPoleClamp);
}

inline void validate_gcl_spec(const LossSpec& spec, std::size_t classes) {
  spec.cloud.validate();
  if (spec.cloud_sizes.size() != classes)
    throw ConfigError("loss: gcl families need a normalized cloud schedule for all " +
                      std::to_string(classes) + " classes");
  for (double d : spec.cloud_sizes)
    if (!(d >= 0.0) || !(d <= 1.0))
      throw ConfigError("loss: cloud sizes must be normalized into [0, 1]");
}

}  // namespace detail

/// |eps| draws for a batch: one clamped Gaussian per sample (shared mode) or
/// per sample-class pair (per_class_draw), in row-major draw order.
inline DenseMatrix draw_epsilon(const LossSpec& spec, std::size_t batch, std::size_t classes,
                                Rng& rng) {
  const auto& cfg = spec.cloud;
  const std::size_t cols = cfg.per_class_draw ? classes : 1;
  DenseMatrix eps(batch, cols);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      eps(i, j) = std::abs(clamped_gaussian(rng, cfg.mu, cfg.sigma, cfg.clamp_lo, cfg.clamp_hi));
  return eps;
}

/// Core adjustment with an injected epsilon matrix (may be empty when the
/// family draws no noise). Kept separate from the drawing overload so
/// finite-difference checks can hold the noise fixed.
inline PerturbedLogits adjusted_logits_fixed(const LossSpec& spec, const DenseMatrix& scores,
                                             const std::vector<std::size_t>& labels,
                                             const ClassProfile& profile,
                                             const DenseMatrix& epsilon, bool training) {
  const std::size_t batch = scores.rows(), classes = scores.cols();
  if (labels.size() != batch) throw InvalidArgument("adjusted_logits: labels/batch mismatch");
  for (std::size_t y : labels)
    if (y >= classes) throw InvalidArgument("adjusted_logits: label out of range");

  PerturbedLogits out;
  out.training = training;
  out.scores = scores;

  if (spec.family == LossFamily::cross_entropy) {
    out.logits = scores;  // raw pass-through, nothing to adjust
    return out;
  }

  const double s = spec.cloud.scale;
  out.logits = DenseMatrix(batch, classes);

  if (!training) {
    // Evaluation: plain scaled cosine, no margins, no noise.
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < classes; ++j) out.logits(i, j) = s * scores(i, j);
    return out;
  }

  switch (spec.family) {
    case LossFamily::cosine_margin:
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j)
          out.logits(i, j) = s * (scores(i, j) - (j == labels[i] ? spec.margin : 0.0));
      break;

    case LossFamily::angular_margin: {
      const double cos_m = std::cos(spec.margin), sin_m = std::sin(spec.margin);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j) {
          if (j == labels[i]) {
            const double c = detail::clamp_for_trig(scores(i, j));
            const double sin_t = std::sqrt(1.0 - c * c);
            out.logits(i, j) = s * (c * cos_m - sin_t * sin_m);
          } else {
            out.logits(i, j) = s * scores(i, j);
          }
        }
      break;
    }

    case LossFamily::ldam: {
      if (profile.num_classes() != classes)
        throw ConfigError("loss: ldam profile does not match logit width");
      const auto margins = ldam_margins(profile, spec.ldam_max_margin);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j)
          out.logits(i, j) = s * (scores(i, j) - (j == labels[i] ? margins[j] : 0.0));
      break;
    }

    case LossFamily::gcl_e: {
      detail::validate_gcl_spec(spec, classes);
      if (epsilon.rows() != batch) throw InvalidArgument("adjusted_logits: epsilon batch mismatch");
      out.epsilon = epsilon;
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j) {
          const double e = epsilon(i, epsilon.cols() == 1 ? 0 : j);
          out.logits(i, j) = s * (scores(i, j) - spec.cloud_sizes[j] * e);
        }
      break;
    }

    case LossFamily::gcl_a: {
      detail::validate_gcl_spec(spec, classes);
      if (epsilon.rows() != batch) throw InvalidArgument("adjusted_logits: epsilon batch mismatch");
      out.epsilon = epsilon;
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j) {
          const double e = epsilon(i, epsilon.cols() == 1 ? 0 : j);
          const double a = spec.cloud_sizes[j] * spec.cloud.angular_scale * e;
          const double c = detail::clamp_for_trig(scores(i, j));
          const double sin_t = std::sqrt(1.0 - c * c);
          // cos(theta + a) expanded so no arccos is needed.
          out.logits(i, j) = s * (c * std::cos(a) - sin_t * std::sin(a));
        }
      break;
    }

    case LossFamily::cross_entropy:
      break;  // handled above
  }
  return out;
}

/// Drawing overload: one forward pass, one fresh noise draw (gcl families in
/// training mode only; every other configuration consumes no randomness).
inline PerturbedLogits adjusted_logits(const LossSpec& spec, const DenseMatrix& scores,
                                       const std::vector<std::size_t>& labels,
                                       const ClassProfile& profile, Rng& rng, bool training) {
  DenseMatrix eps;
  if (training && spec.is_gcl()) {
    detail::validate_gcl_spec(spec, scores.cols());
    eps = draw_epsilon(spec, scores.rows(), scores.cols(), rng);
  }
  return adjusted_logits_fixed(spec, scores, labels, profile, eps, training);
}

/// dL/dlogits -> dL/dscores for the adjustment above. Noise and margins are
/// constants, so most families just scale by s; the angular forms pick up the
/// sin(theta + a) / sin(theta) chain factor on perturbed entries.
inline DenseMatrix adjustment_backward(const LossSpec& spec, const PerturbedLogits& fwd,
                                       const std::vector<std::size_t>& labels,
                                       const DenseMatrix& dlogits) {
  check_shape(dlogits.same_shape(fwd.logits), "adjustment_backward upstream gradient");
  const std::size_t batch = dlogits.rows(), classes = dlogits.cols();

  if (spec.family == LossFamily::cross_entropy) return dlogits;

  const double s = spec.cloud.scale;
  DenseMatrix dscores(batch, classes);

  if (!fwd.training) {
    for (std::size_t i = 0; i < dscores.size(); ++i)
      dscores.data()[i] = s * dlogits.data()[i];
    return dscores;
  }

  switch (spec.family) {
    case LossFamily::cosine_margin:
    case LossFamily::ldam:
    case LossFamily::gcl_e:
      for (std::size_t i = 0; i < dscores.size(); ++i)
        dscores.data()[i] = s * dlogits.data()[i];
      break;

    case LossFamily::angular_margin: {
      const double cos_m = std::cos(spec.margin), sin_m = std::sin(spec.margin);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j) {
          double factor = s;
          if (j == labels[i]) {
            const double c = detail::clamp_for_trig(fwd.scores(i, j));
            const double sin_t = std::sqrt(1.0 - c * c);
            factor = s * (cos_m + sin_m * c / sin_t);
          }
          dscores(i, j) = factor * dlogits(i, j);
        }
      break;
    }

    case LossFamily::gcl_a:
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j) {
          const double e = fwd.epsilon(i, fwd.epsilon.cols() == 1 ? 0 : j);
          const double a = spec.cloud_sizes[j] * spec.cloud.angular_scale * e;
          const double c = detail::clamp_for_trig(fwd.scores(i, j));
          const double sin_t = std::sqrt(1.0 - c * c);
          const double factor = s * (std::cos(a) + std::sin(a) * c / sin_t);
          dscores(i, j) = factor * dlogits(i, j);
        }
      break;

    case LossFamily::cross_entropy:
      break;  // handled above
  }
  return dscores;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy.
// ---------------------------------------------------------------------------

struct SoftmaxResult {
  double loss = 0.0;
  DenseMatrix probs;
};

/// Mean over the batch of -log softmax(z)_y with max-shift stabilization.
inline SoftmaxResult softmax_ce(const DenseMatrix& logits, const std::vector<std::size_t>& labels) {
  const std::size_t batch = logits.rows(), classes = logits.cols();
  if (labels.size() != batch) throw InvalidArgument("softmax_ce: labels/batch mismatch");

  SoftmaxResult res;
  res.probs = DenseMatrix(batch, classes);
  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double* z = logits.row_ptr(i);
    double mx = z[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, z[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < classes; ++j) denom += std::exp(z[j] - mx);
    const double log_denom = std::log(denom);
    for (std::size_t j = 0; j < classes; ++j)
      res.probs(i, j) = std::exp(z[j] - mx - log_denom);
    total += -(z[labels[i]] - mx - log_denom);
  }
  res.loss = total / static_cast<double>(batch);
  return res;
}

inline SoftmaxResult softmax_ce(const PerturbedLogits& fwd, const std::vector<std::size_t>& labels) {
  return softmax_ce(fwd.logits, labels);
}

/// dLoss/dlogits for the mean cross-entropy: (p - onehot) / batch.
inline DenseMatrix grad_wrt_logits(const DenseMatrix& probs, const std::vector<std::size_t>& labels) {
  const std::size_t batch = probs.rows();
  if (labels.size() != batch) throw InvalidArgument("grad_wrt_logits: labels/batch mismatch");
  DenseMatrix g = probs;
  const double inv = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    g(i, labels[i]) -= 1.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) g(i, j) *= inv;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Full head: features + classifier -> loss, with gradients.
// ---------------------------------------------------------------------------

struct HeadOutput {
  double loss = 0.0;
  DenseMatrix probs;
  PerturbedLogits forward;
  DenseMatrix dfeatures;    // filled when want_grad
  DenseMatrix dclassifier;  // filled when want_grad
};

/// One pass through scores -> adjusted logits -> softmax CE, optionally with
/// the backward chain down to features and classifier. For cosine families
/// the classifier gradient includes the column-normalization Jacobian.
inline HeadOutput loss_head_fixed(const DenseMatrix& features, const DenseMatrix& classifier,
                                  const LossSpec& spec, const std::vector<std::size_t>& labels,
                                  const ClassProfile& profile, const DenseMatrix& epsilon,
                                  bool training, bool want_grad) {
  HeadOutput out;
  if (spec.family == LossFamily::cross_entropy) {
    const DenseMatrix raw = matmul(features, classifier);
    out.forward = adjusted_logits_fixed(spec, raw, labels, profile, epsilon, training);
    auto sm = softmax_ce(out.forward, labels);
    out.loss = sm.loss;
    out.probs = std::move(sm.probs);
    if (want_grad) {
      const DenseMatrix dz = grad_wrt_logits(out.probs, labels);
      out.dfeatures = matmul_transB(dz, classifier);
      out.dclassifier = matmul_transA(features, dz);
    }
    return out;
  }

  const CosineCache cache = cosine_scores_cached(features, classifier);
  out.forward = adjusted_logits_fixed(spec, cache.cos_scores, labels, profile, epsilon, training);
  auto sm = softmax_ce(out.forward, labels);
  out.loss = sm.loss;
  out.probs = std::move(sm.probs);
  if (want_grad) {
    const DenseMatrix dz = grad_wrt_logits(out.probs, labels);
    const DenseMatrix dcos = adjustment_backward(spec, out.forward, labels, dz);
    CosineGrads grads = cosine_scores_backward(cache, dcos);
    out.dfeatures = std::move(grads.dfeatures);
    out.dclassifier = std::move(grads.danchors);
  }
  return out;
}

inline HeadOutput loss_head(const DenseMatrix& features, const DenseMatrix& classifier,
                            const LossSpec& spec, const std::vector<std::size_t>& labels,
                            const ClassProfile& profile, Rng& rng, bool training,
                            bool want_grad) {
  DenseMatrix eps;
  if (training && spec.is_gcl()) {
    detail::validate_gcl_spec(spec, classifier.cols());
    eps = draw_epsilon(spec, features.rows(), classifier.cols(), rng);
  }
  return loss_head_fixed(features, classifier, spec, labels, profile, eps, training, want_grad);
}

}  // namespace gcl
