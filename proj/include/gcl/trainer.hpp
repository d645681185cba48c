#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gcl/checkpoint.hpp"
#include "gcl/cloud_schedule.hpp"
#include "gcl/dataset.hpp"
#include "gcl/errors.hpp"
#include "gcl/loss.hpp"
#include "gcl/metrics.hpp"
#include "gcl/model.hpp"
#include "gcl/sampler.hpp"

namespace gcl {

// ---------------------------------------------------------------------------
// Two-stage training:
//   stage 1  iterations [0, stage1_iters): instance-balanced batches, the
//            configured loss, momentum SGD on every parameter.
//   stage 2  iterations [stage1_iters, stage1_iters + stage2_iters): batches
//            from the re-balancing sampler, same loss (noise stays on), and
//            updates restricted to the classifier. Cloud sizes keep their
//            stage-1 values.
// Iteration accounting is global across both stages, as is the learning-rate
// schedule. One Rng drives batch draws and noise draws, in that order within
// an iteration, so a checkpointed state resumes bit-for-bit.
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t stage1_iters = 3000;
  std::size_t stage2_iters = 500;
  std::size_t batch = 64;
  double base_lr = 0.1;
  double gamma = 0.1;
  std::vector<std::size_t> milestones;
  std::size_t warmup_iters = 0;
  double momentum = 0.9;
  std::string loss = "gcl-e";
  std::string schedule = "log";
  std::string stage2_sampler = "cbs";
  std::uint64_t seed = 42;
  GaussianCloudConfig cloud;

  std::size_t total_iters() const { return stage1_iters + stage2_iters; }

  void validate() const {
    if (batch < 1) throw ConfigError("train config: batch must be >= 1");
    if (!(base_lr > 0.0)) throw ConfigError("train config: base_lr must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train config: gamma in (0, 1]");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train config: momentum in [0, 1)");
    for (std::size_t i = 0; i < milestones.size(); ++i) {
      if (i > 0 && milestones[i] <= milestones[i - 1])
        throw ConfigError("train config: milestones must be strictly increasing");
      if (milestones[i] >= total_iters())
        throw ConfigError("train config: milestone beyond the last iteration");
    }
    cloud.validate();
    LossSpec::parse(loss);
    SamplerSpec::parse(stage2_sampler);
  }
};

/// Linear warmup from 0 over warmup_iters, then base * gamma^(milestones passed).
inline double lr_at(const TrainConfig& cfg, std::size_t iteration) {
  if (cfg.warmup_iters > 0 && iteration < cfg.warmup_iters)
    return cfg.base_lr * static_cast<double>(iteration) / static_cast<double>(cfg.warmup_iters);
  double lr = cfg.base_lr;
  for (std::size_t m : cfg.milestones)
    if (iteration >= m) lr *= cfg.gamma;
  return lr;
}

/// Loss spec assembled from config strings: cloud settings attached, and for
/// the gcl families the normalized schedule for this training profile.
inline LossSpec build_loss_spec(const TrainConfig& cfg, const ClassProfile& profile) {
  LossSpec spec = LossSpec::parse(cfg.loss);
  spec.cloud = cfg.cloud;
  if (spec.is_gcl()) spec.cloud_sizes = make_cloud_schedule(profile, cfg.schedule).normalized;
  return spec;
}

class Trainer {
 public:
  Trainer(TrainConfig cfg, const Dataset& train, Model model, std::size_t start_iteration = 0)
      : cfg_(std::move(cfg)),
        data_(&train),
        model_(std::move(model)),
        velocity_(zero_gradients(model_)),
        rng_(cfg_.seed),
        iteration_(start_iteration) {
    cfg_.validate();
    validate_dataset(train);
    if (train.num_classes() != model_.num_classes)
      throw ConfigError("trainer: dataset classes do not match the model");
    if (train.dim() != model_.input_dim)
      throw ConfigError("trainer: dataset width does not match the model input");
    spec_ = build_loss_spec(cfg_, train.profile);
    stage1_probs_ =
        sampling_probabilities(train.profile, SamplerSpec{SamplerKind::instance_balanced},
                               train.labels);
    stage2_probs_ =
        sampling_probabilities(train.profile, SamplerSpec::parse(cfg_.stage2_sampler),
                               train.labels);
  }

  const TrainConfig& config() const { return cfg_; }
  const Model& model() const { return model_; }
  Model take_model() { return std::move(model_); }
  std::size_t iteration() const { return iteration_; }
  bool in_stage2() const { return iteration_ >= cfg_.stage1_iters; }
  const std::vector<double>& loss_trace() const { return trace_; }
  const LossSpec& loss_spec() const { return spec_; }

  /// One Algorithm-style iteration: draw batch, forward, loss, backward,
  /// momentum SGD (classifier-only once stage 2 starts).
  void step() {
    const bool stage2 = in_stage2();
    const double lr = lr_at(cfg_, iteration_);
    const auto& probs = stage2 ? stage2_probs_ : stage1_probs_;
    const auto indices = draw_batch(probs, cfg_.batch, rng_);

    DenseMatrix inputs(indices.size(), data_->dim());
    std::vector<std::size_t> labels(indices.size());
    for (std::size_t b = 0; b < indices.size(); ++b) {
      labels[b] = data_->labels[indices[b]];
      const double* src = data_->features.row_ptr(indices[b]);
      double* dst = inputs.row_ptr(b);
      for (std::size_t d = 0; d < data_->dim(); ++d) dst[d] = src[d];
    }

    ForwardCache cache;
    const DenseMatrix features = forward(model_, inputs, &cache);
    HeadOutput head = loss_head(features, model_.classifier, spec_, labels, data_->profile, rng_,
                                /*training=*/true, /*want_grad=*/true);
    if (!std::isfinite(head.loss))
      throw NumericError("non-finite loss at iteration " + std::to_string(iteration_) +
                         " (lr=" + std::to_string(lr) + ")");

    GradientSet grads = backward(model_, cache, head.dfeatures, std::move(head.dclassifier));
    if (lr > 0.0) sgd_step(model_, grads, lr, cfg_.momentum, velocity_, stage2);
    trace_.push_back(head.loss);
    ++iteration_;
  }

  void run_to(std::size_t iteration) {
    while (iteration_ < iteration) step();
  }

  void run_all() { run_to(cfg_.total_iters()); }

  void save(const std::string& path) const {
    Checkpoint cp;
    cp.model = model_;
    cp.seed = cfg_.seed;
    cp.iteration = iteration_;
    cp.trainer = TrainerState{velocity_, rng_};
    save_checkpoint(cp, path);
  }

  static Trainer resume(const std::string& path, TrainConfig cfg, const Dataset& train) {
    Checkpoint cp = load_checkpoint(path);
    if (!cp.trainer) throw IoError("checkpoint has no trainer state: " + path);
    Trainer t(std::move(cfg), train, std::move(cp.model), cp.iteration);
    t.velocity_ = std::move(cp.trainer->velocity);
    t.rng_ = cp.trainer->rng;
    return t;
  }

 private:
  TrainConfig cfg_;
  const Dataset* data_;
  Model model_;
  GradientSet velocity_;
  Rng rng_;
  std::size_t iteration_ = 0;
  LossSpec spec_;
  SampleProbabilities stage1_probs_, stage2_probs_;
  std::vector<double> trace_;
};

struct StageResult {
  Model model;
  std::vector<double> loss_trace;
};

/// Stage 1 alone: stage1_iters iterations of full-parameter training.
inline StageResult train_stage1(const TrainConfig& cfg, const Dataset& data, Model model) {
  Trainer t(cfg, data, std::move(model));
  t.run_to(cfg.stage1_iters);
  StageResult r{t.take_model(), t.loss_trace()};
  return r;
}

/// Stage 2 alone on an already-trained model: classifier-only updates under
/// the stage-2 sampler. The learning-rate schedule picks up at the global
/// iteration stage1_iters. Run standalone this restarts the noise stream
/// from the seed; byte-exact continuation goes through Trainer::resume.
inline Model retrain_classifier(const TrainConfig& cfg, const Dataset& data, Model model) {
  Trainer t(cfg, data, std::move(model), cfg.stage1_iters);
  t.run_to(cfg.total_iters());
  return t.take_model();
}

/// Features for every sample, as a CSV mirror of the dataset (label column
/// then feature_dim embedding columns, dataset order).
inline void export_embeddings(const Model& m, const Dataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "label";
  for (std::size_t d = 0; d < m.feature_dim; ++d) os << ",e" << d;
  os << "\n";
  if (data.size() > 0) {
    const DenseMatrix features = forward(m, data.features);
    char buf[40];
    for (std::size_t i = 0; i < data.size(); ++i) {
      os << data.labels[i];
      for (std::size_t d = 0; d < m.feature_dim; ++d) {
        std::snprintf(buf, sizeof(buf), "%.17g", features(i, d));
        os << ',' << buf;
      }
      os << "\n";
    }
  }
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace gcl
