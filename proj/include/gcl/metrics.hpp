#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gcl/dataset.hpp"
#include "gcl/errors.hpp"
#include "gcl/loss.hpp"
#include "gcl/model.hpp"

namespace gcl {

// ---------------------------------------------------------------------------
// Evaluation: deterministic argmax over evaluation-mode logits, reported
// overall, per class, and per head/middle/tail group. Groups are assigned
// from TRAIN-split class counts.
// ---------------------------------------------------------------------------

struct GroupThresholds {
  std::size_t head_min = 100;  // head: n_j > head_min
  std::size_t mid_min = 20;    // middle: mid_min < n_j <= head_min, tail below
  bool force_quantiles = false;
};

enum : int { kGroupHead = 0, kGroupMiddle = 1, kGroupTail = 2 };

/// Group index per class. Falls back to count-quantile thirds (largest third
/// of classes = head) when the absolute thresholds exceed every class count,
/// which is the normal situation at desk scale.
inline std::vector<int> assign_groups(const ClassProfile& train_profile,
                                      const GroupThresholds& t, bool* used_quantiles = nullptr) {
  train_profile.validate();
  const std::size_t classes = train_profile.num_classes();
  std::vector<int> groups(classes, kGroupTail);

  const bool absolute_possible = train_profile.n_max() > t.head_min;
  const bool quantiles = t.force_quantiles || !absolute_possible;
  if (used_quantiles) *used_quantiles = quantiles;

  if (!quantiles) {
    for (std::size_t c = 0; c < classes; ++c) {
      if (train_profile.counts[c] > t.head_min)
        groups[c] = kGroupHead;
      else if (train_profile.counts[c] > t.mid_min)
        groups[c] = kGroupMiddle;
    }
    return groups;
  }

  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return train_profile.counts[a] > train_profile.counts[b];
  });
  const std::size_t head_end = std::max<std::size_t>(1, classes / 3);
  const std::size_t mid_end = std::max(head_end, 2 * classes / 3);
  for (std::size_t rank = 0; rank < classes; ++rank)
    groups[order[rank]] = rank < head_end ? kGroupHead : (rank < mid_end ? kGroupMiddle : kGroupTail);
  return groups;
}

struct MetricsReport {
  double overall = 0.0;
  std::vector<double> per_class;
  std::vector<std::size_t> test_counts;
  std::vector<std::size_t> correct_counts;
  std::vector<int> groups;
  double head = std::numeric_limits<double>::quiet_NaN();
  double middle = std::numeric_limits<double>::quiet_NaN();
  double tail = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> confusion;  // row-major C x C, row = true class
  std::size_t head_min = 100, mid_min = 20;
  bool used_quantiles = false;
  std::uint64_t seed = 0;
  std::string loss_name, schedule_name, sampler_name;

  std::size_t num_classes() const { return per_class.size(); }
  std::size_t confusion_at(std::size_t truth, std::size_t pred) const {
    return confusion[truth * num_classes() + pred];
  }
};

/// Evaluation-mode class predictions: argmax over plain scaled-cosine logits
/// (raw dot products for the ce family). Ties resolve to the lowest index.
inline std::vector<std::size_t> predict(const Model& m, const DenseMatrix& inputs,
                                        const LossSpec& spec) {
  const DenseMatrix features = forward(m, inputs);
  const DenseMatrix scores = spec.uses_cosine() ? cosine_scores(features, m.classifier)
                                                : matmul(features, m.classifier);
  std::vector<std::size_t> preds(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const double* row = scores.row_ptr(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.cols(); ++j)
      if (row[j] > row[best]) best = j;
    preds[i] = best;
  }
  return preds;
}

inline MetricsReport evaluate(const Model& m, const Dataset& test,
                              const ClassProfile& train_profile, const GroupThresholds& thresholds,
                              const LossSpec& spec) {
  if (test.size() == 0) throw InvalidArgument("evaluate: empty dataset");
  if (test.num_classes() > m.num_classes)
    throw InvalidArgument("evaluate: dataset has more classes than the model");
  if (train_profile.num_classes() != m.num_classes)
    throw InvalidArgument("evaluate: train profile does not match the model");

  const std::size_t classes = m.num_classes;
  MetricsReport rep;
  rep.test_counts.assign(classes, 0);
  rep.correct_counts.assign(classes, 0);
  rep.confusion.assign(classes * classes, 0);

  const auto preds = predict(m, test.features, spec);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t y = test.labels[i], p = preds[i];
    ++rep.test_counts[y];
    ++rep.confusion[y * classes + p];
    if (p == y) {
      ++rep.correct_counts[y];
      ++correct;
    }
  }
  rep.overall = static_cast<double>(correct) / static_cast<double>(test.size());

  rep.per_class.assign(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c)
    if (rep.test_counts[c] > 0)
      rep.per_class[c] =
          static_cast<double>(rep.correct_counts[c]) / static_cast<double>(rep.test_counts[c]);

  rep.groups = assign_groups(train_profile, thresholds, &rep.used_quantiles);
  rep.head_min = thresholds.head_min;
  rep.mid_min = thresholds.mid_min;
  double sums[3] = {0, 0, 0};
  std::size_t sizes[3] = {0, 0, 0};
  for (std::size_t c = 0; c < classes; ++c) {
    sums[rep.groups[c]] += rep.per_class[c];
    ++sizes[rep.groups[c]];
  }
  if (sizes[kGroupHead]) rep.head = sums[kGroupHead] / sizes[kGroupHead];
  if (sizes[kGroupMiddle]) rep.middle = sums[kGroupMiddle] / sizes[kGroupMiddle];
  if (sizes[kGroupTail]) rep.tail = sums[kGroupTail] / sizes[kGroupTail];
  return rep;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// key=value block, a blank line, then the per-class table.
inline std::string metrics_to_text(const MetricsReport& rep, const ClassProfile& train_profile) {
  std::ostringstream os;
  os << "overall=" << format_double(rep.overall) << "\n";
  os << "head=" << format_double(rep.head) << "\n";
  os << "middle=" << format_double(rep.middle) << "\n";
  os << "tail=" << format_double(rep.tail) << "\n";
  os << "groups=" << (rep.used_quantiles ? "quantile" : "absolute") << "\n";
  os << "head_min=" << rep.head_min << "\n";
  os << "mid_min=" << rep.mid_min << "\n";
  os << "classes=" << rep.num_classes() << "\n";
  os << "seed=" << rep.seed << "\n";
  os << "loss=" << rep.loss_name << "\n";
  os << "schedule=" << rep.schedule_name << "\n";
  os << "sampler=" << rep.sampler_name << "\n";
  os << "\n";
  os << "class,train_count,test_count,correct,accuracy,group\n";
  static const char* names[3] = {"head", "middle", "tail"};
  for (std::size_t c = 0; c < rep.num_classes(); ++c)
    os << c << ',' << train_profile.counts[c] << ',' << rep.test_counts[c] << ','
       << rep.correct_counts[c] << ',' << format_double(rep.per_class[c]) << ','
       << names[rep.groups[c]] << "\n";
  return os.str();
}

/// Machine-readable per-class rows (one file per run, plot-ready).
inline std::string metrics_to_csv(const MetricsReport& rep) {
  std::ostringstream os;
  os << "class,test_count,correct,accuracy,group\n";
  for (std::size_t c = 0; c < rep.num_classes(); ++c)
    os << c << ',' << rep.test_counts[c] << ',' << rep.correct_counts[c] << ','
       << format_double(rep.per_class[c]) << ',' << rep.groups[c] << "\n";
  return os.str();
}

}  // namespace gcl
