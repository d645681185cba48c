#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gcl/class_profile.hpp"
#include "gcl/loss.hpp"
#include "gcl/matrix.hpp"
#include "gcl/model.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// ---------------------------------------------------------------------------
// End-to-end gradient verification: analytic gradients of the full
// composition (inputs -> backbone -> features -> adjusted logits -> softmax
// CE) against central finite differences, with the noise draw held fixed so
// both paths see the same function.
// ---------------------------------------------------------------------------

inline std::vector<double*> collect_parameters(Model& m) {
  std::vector<double*> ps;
  for (std::size_t k = 0; k < m.num_layers(); ++k) {
    for (auto& v : m.weights[k].data()) ps.push_back(&v);
    for (auto& v : m.biases[k]) ps.push_back(&v);
  }
  for (auto& v : m.classifier.data()) ps.push_back(&v);
  return ps;
}

inline std::vector<double> flatten_gradients(const GradientSet& g) {
  std::vector<double> out;
  for (std::size_t k = 0; k < g.weight_grads.size(); ++k) {
    out.insert(out.end(), g.weight_grads[k].data().begin(), g.weight_grads[k].data().end());
    out.insert(out.end(), g.bias_grads[k].begin(), g.bias_grads[k].end());
  }
  out.insert(out.end(), g.classifier_grad.data().begin(), g.classifier_grad.data().end());
  return out;
}

struct GradCheckInstance {
  Model model;
  DenseMatrix inputs;
  std::vector<std::size_t> labels;
  ClassProfile profile;
  LossSpec spec;
  DenseMatrix epsilon;
};

/// Random desk-size instance for one loss family. Counts are drawn imbalanced
/// so ldam margins and cloud sizes are nondegenerate.
inline GradCheckInstance make_gradcheck_instance(const std::string& family, Rng& rng,
                                                 std::size_t feature_dim, std::size_t classes,
                                                 std::size_t batch) {
  GradCheckInstance inst;
  const std::size_t input_dim = 3 + rng.index_below(6);
  std::vector<std::size_t> hidden;
  if (rng.uniform() < 0.7) hidden.push_back(4 + rng.index_below(6));
  inst.model = init_model(input_dim, hidden, feature_dim, classes, rng);

  inst.inputs = DenseMatrix(batch, input_dim);
  for (auto& v : inst.inputs.data()) v = rng.gaussian();

  inst.labels.resize(batch);
  for (auto& y : inst.labels) y = rng.index_below(classes);

  inst.profile.counts.resize(classes);
  for (auto& n : inst.profile.counts) n = 2 + rng.index_below(499);

  inst.spec = LossSpec::parse(family);
  if (inst.spec.is_gcl()) {
    inst.spec.cloud_sizes.resize(classes);
    double mx = 0.0;
    for (auto& d : inst.spec.cloud_sizes) {
      d = rng.uniform();
      mx = std::max(mx, d);
    }
    for (auto& d : inst.spec.cloud_sizes) d /= mx;
    inst.epsilon = draw_epsilon(inst.spec, batch, classes, rng);
  }
  return inst;
}

inline double instance_loss(GradCheckInstance& inst) {
  const DenseMatrix features = forward(inst.model, inst.inputs);
  return loss_head_fixed(features, inst.model.classifier, inst.spec, inst.labels, inst.profile,
                         inst.epsilon, /*training=*/true, /*want_grad=*/false)
      .loss;
}

/// Max absolute gradient deviation scaled by the larger gradient magnitude
/// (floored at 1 so near-zero gradients do not inflate the ratio).
inline double gradcheck_relative_error(GradCheckInstance& inst, double step = 1e-6) {
  ForwardCache cache;
  const DenseMatrix features = forward(inst.model, inst.inputs, &cache);
  HeadOutput head = loss_head_fixed(features, inst.model.classifier, inst.spec, inst.labels,
                                    inst.profile, inst.epsilon, true, true);
  GradientSet grads = backward(inst.model, cache, head.dfeatures, head.dclassifier);
  const std::vector<double> analytic = flatten_gradients(grads);

  std::vector<double*> params = collect_parameters(inst.model);
  std::vector<double> numeric(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = *params[p];
    *params[p] = saved + step;
    const double up = instance_loss(inst);
    *params[p] = saved - step;
    const double down = instance_loss(inst);
    *params[p] = saved;
    numeric[p] = (up - down) / (2.0 * step);
  }

  double max_dev = 0.0, scale = 1.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    max_dev = std::max(max_dev, std::abs(analytic[p] - numeric[p]));
    scale = std::max({scale, std::abs(analytic[p]), std::abs(numeric[p])});
  }
  return max_dev / scale;
}

struct GradSuiteRow {
  std::string family;
  std::size_t instances = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Runs `instances` random checks per family over D in {4,16}, C in {3,10},
/// batch in {1,8} and reports the worst relative error per family.
inline std::vector<GradSuiteRow> run_gradient_suite(const std::vector<std::string>& families,
                                                    std::size_t instances, std::uint64_t seed,
                                                    double tolerance = 1e-5) {
  const std::size_t feature_dims[] = {4, 16};
  const std::size_t class_counts[] = {3, 10};
  const std::size_t batches[] = {1, 8};

  std::vector<GradSuiteRow> rows;
  Rng rng(seed);
  for (const auto& family : families) {
    GradSuiteRow row;
    row.family = family;
    row.instances = instances;
    for (std::size_t t = 0; t < instances; ++t) {
      auto inst = make_gradcheck_instance(family, rng, feature_dims[t % 2],
                                          class_counts[(t / 2) % 2], batches[(t / 4) % 2]);
      row.max_rel_err = std::max(row.max_rel_err, gradcheck_relative_error(inst));
    }
    row.pass = row.max_rel_err <= tolerance;
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<std::string> default_gradcheck_families() {
  return {"ce", "cosface:0.35", "arcface-style:0.3", "ldam:0.5", "gcl-e", "gcl-a"};
}

}  // namespace gcl
