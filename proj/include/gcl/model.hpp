#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gcl/errors.hpp"
#include "gcl/matrix.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// ---------------------------------------------------------------------------
// Small feed-forward backbone with a bias-free cosine classifier head.
//
// Backbone layers are affine maps with tanh between hidden layers; the final
// projection to the feature space is linear. tanh keeps every point of the
// network smooth, which the finite-difference gradient checks lean on.
// Classifier anchors are stored unnormalized; cosine_scores normalizes them
// on the fly every forward pass.
// ---------------------------------------------------------------------------

struct Model {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;

  std::vector<DenseMatrix> weights;  // layer k: (in_k x out_k)
  std::vector<DenseVector> biases;   // layer k: out_k
  DenseMatrix classifier;            // feature_dim x num_classes, bias-free

  // Bumped on every parameter update; forward caches record it so a stale
  // cache cannot silently feed backward().
  std::uint64_t revision = 0;

  std::size_t num_layers() const { return weights.size(); }

  std::size_t parameter_count() const {
    std::size_t n = classifier.size();
    for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].size() + biases[k].size();
    return n;
  }

  bool all_finite() const {
    if (!classifier.all_finite()) return false;
    for (const auto& w : weights)
      if (!w.all_finite()) return false;
    for (const auto& b : biases)
      for (double v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }
};

/// Weights ~ N(0, 1/fan_in), biases zero, classifier anchors drawn standard
/// normal then column-normalized to unit length. Draw order: backbone layers
/// in sequence (entries row-major), then the classifier (row-major), so a
/// seed pins every parameter bit.
inline Model init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                        std::size_t feature_dim, std::size_t num_classes, Rng& rng) {
  if (input_dim < 1 || feature_dim < 1 || num_classes < 1)
    throw InvalidArgument("init_model: dimensions must be >= 1");
  for (std::size_t h : hidden)
    if (h < 1) throw InvalidArgument("init_model: hidden sizes must be >= 1");

  Model m;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.feature_dim = feature_dim;
  m.num_classes = num_classes;

  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(feature_dim);

  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::size_t in = dims[k], out = dims[k + 1];
    DenseMatrix w(in, out);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w.data()) v = rng.gaussian(0.0, stddev);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }

  m.classifier = DenseMatrix(feature_dim, num_classes);
  for (double& v : m.classifier.data()) v = rng.gaussian();
  for (std::size_t j = 0; j < num_classes; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < feature_dim; ++d) acc += m.classifier(d, j) * m.classifier(d, j);
    const double n = std::sqrt(acc);
    for (std::size_t d = 0; d < feature_dim; ++d) m.classifier(d, j) /= n;
  }
  return m;
}

struct ForwardCache {
  std::vector<DenseMatrix> activations;  // a_0 = inputs .. a_L = features
  std::uint64_t revision = 0;
};

/// Features for a batch of inputs; fills cache (when given) for backward().
inline DenseMatrix forward(const Model& m, const DenseMatrix& inputs, ForwardCache* cache = nullptr) {
  if (inputs.cols() != m.input_dim)
    throw InvalidArgument("forward: input width " + std::to_string(inputs.cols()) +
                          " does not match model input_dim " + std::to_string(m.input_dim));

  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(inputs);
    cache->revision = m.revision;
  }

  DenseMatrix a = inputs;
  for (std::size_t k = 0; k < m.num_layers(); ++k) {
    DenseMatrix z = matmul(a, m.weights[k]);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      double* zi = z.row_ptr(i);
      for (std::size_t j = 0; j < z.cols(); ++j) zi[j] += m.biases[k][j];
    }
    if (k + 1 < m.num_layers())
      for (double& v : z.data()) v = std::tanh(v);
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

struct GradientSet {
  std::vector<DenseMatrix> weight_grads;
  std::vector<DenseVector> bias_grads;
  DenseMatrix classifier_grad;
};

inline GradientSet zero_gradients(const Model& m) {
  GradientSet g;
  for (std::size_t k = 0; k < m.num_layers(); ++k) {
    g.weight_grads.emplace_back(m.weights[k].rows(), m.weights[k].cols());
    g.bias_grads.emplace_back(m.biases[k].size(), 0.0);
  }
  g.classifier_grad = DenseMatrix(m.classifier.rows(), m.classifier.cols());
  return g;
}

/// Backpropagates dLoss/dFeatures through the backbone and adopts the
/// classifier gradient computed by the loss head.
inline GradientSet backward(const Model& m, const ForwardCache& cache,
                            const DenseMatrix& dfeatures, DenseMatrix dclassifier) {
  if (cache.revision != m.revision || cache.activations.size() != m.num_layers() + 1)
    throw InvalidArgument("backward: stale or mismatched forward cache");
  check_shape(dfeatures.rows() == cache.activations.back().rows() &&
                  dfeatures.cols() == m.feature_dim,
              "backward dfeatures");
  check_shape(dclassifier.same_shape(m.classifier), "backward dclassifier");

  GradientSet g = zero_gradients(m);
  g.classifier_grad = std::move(dclassifier);

  DenseMatrix grad = dfeatures;  // dL/da_{k+1} entering layer k
  for (std::size_t k = m.num_layers(); k-- > 0;) {
    if (k + 1 < m.num_layers()) {
      const DenseMatrix& act = cache.activations[k + 1];  // tanh output of layer k
      for (std::size_t i = 0; i < grad.size(); ++i)
        grad.data()[i] *= 1.0 - act.data()[i] * act.data()[i];
    }
    g.weight_grads[k] = matmul_transA(cache.activations[k], grad);
    for (std::size_t i = 0; i < grad.rows(); ++i)
      for (std::size_t j = 0; j < grad.cols(); ++j) g.bias_grads[k][j] += grad(i, j);
    if (k > 0) grad = matmul_transB(grad, m.weights[k]);
  }
  return g;
}

/// Classic momentum SGD: v <- momentum v + g, w <- w - lr v. With
/// freeze_backbone only the classifier (and its velocity) moves; backbone
/// tensors stay bitwise identical.
inline void sgd_step(Model& m, const GradientSet& grads, double lr, double momentum,
                     GradientSet& velocity, bool freeze_backbone = false) {
  if (!(lr > 0.0)) throw InvalidArgument("sgd_step: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("sgd_step: momentum in [0,1)");

  if (!freeze_backbone) {
    for (std::size_t k = 0; k < m.num_layers(); ++k) {
      auto& vw = velocity.weight_grads[k];
      for (std::size_t i = 0; i < vw.size(); ++i) {
        vw.data()[i] = momentum * vw.data()[i] + grads.weight_grads[k].data()[i];
        m.weights[k].data()[i] -= lr * vw.data()[i];
      }
      auto& vb = velocity.bias_grads[k];
      for (std::size_t i = 0; i < vb.size(); ++i) {
        vb[i] = momentum * vb[i] + grads.bias_grads[k][i];
        m.biases[k][i] -= lr * vb[i];
      }
    }
  }
  auto& vc = velocity.classifier_grad;
  for (std::size_t i = 0; i < vc.size(); ++i) {
    vc.data()[i] = momentum * vc.data()[i] + grads.classifier_grad.data()[i];
    m.classifier.data()[i] -= lr * vc.data()[i];
  }
  ++m.revision;
}

}  // namespace gcl
