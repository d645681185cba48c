#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gcl/class_profile.hpp"
#include "gcl/errors.hpp"
#include "gcl/matrix.hpp"
#include "gcl/rng.hpp"

namespace gcl {

enum class Split { train, test };

/// Feature dataset: N x D matrix plus class labels in [0, C).
/// The label histogram always equals profile.counts.
struct Dataset {
  DenseMatrix features;
  std::vector<std::size_t> labels;
  ClassProfile profile;
  Split split = Split::train;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  std::size_t num_classes() const { return profile.num_classes(); }
};

inline std::vector<std::size_t> label_histogram(const std::vector<std::size_t>& labels,
                                                std::size_t num_classes) {
  std::vector<std::size_t> hist(num_classes, 0);
  for (std::size_t y : labels) {
    if (y >= num_classes) throw DataError("label out of range: " + std::to_string(y));
    ++hist[y];
  }
  return hist;
}

inline void validate_dataset(const Dataset& ds) {
  ds.profile.validate();
  if (ds.features.rows() != ds.labels.size())
    throw DataError("dataset: feature rows and labels disagree");
  if (!ds.features.all_finite()) throw DataError("dataset: non-finite feature value");
  if (label_histogram(ds.labels, ds.profile.num_classes()) != ds.profile.counts)
    throw DataError("dataset: label histogram does not match profile");
}

/// Synthetic long-tailed data plus the ground-truth class anchors, kept so
/// tests can run a nearest-anchor reference classifier against the split.
struct SyntheticData {
  Dataset train;
  Dataset test;
  DenseMatrix anchors;  // C x D, unit rows
};

/// Draws C anchors uniformly on the unit hypersphere, then places every
/// sample at anchor + isotropic Gaussian noise (per-coordinate standard
/// deviation class_spread). The train split follows the profile; the test
/// split is freshly drawn and exactly class-balanced.
///
/// Draw order (fixed for reproducibility): anchors row by row, then train
/// samples grouped by class, then test samples grouped by class.
inline SyntheticData generate_synthetic(const ClassProfile& profile, std::size_t dim,
                                        double class_spread, Rng& rng,
                                        std::size_t test_per_class = 100) {
  profile.validate();
  if (dim < 2) throw InvalidArgument("generate_synthetic: dim must be >= 2");
  if (!(class_spread > 0.0)) throw InvalidArgument("generate_synthetic: class_spread must be > 0");
  if (test_per_class < 1) throw InvalidArgument("generate_synthetic: test_per_class must be >= 1");

  const std::size_t num_classes = profile.num_classes();
  SyntheticData out;
  out.anchors = DenseMatrix(num_classes, dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    DenseVector a(dim);
    for (auto& v : a) v = rng.gaussian();
    a = l2_normalize(a);
    for (std::size_t d = 0; d < dim; ++d) out.anchors(c, d) = a[d];
  }

  auto fill_split = [&](Dataset& ds, const std::vector<std::size_t>& counts, Split split) {
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    ds.features = DenseMatrix(total, dim);
    ds.labels.resize(total);
    ds.profile.counts = counts;
    ds.split = split;
    std::size_t row = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
        ds.labels[row] = c;
        for (std::size_t d = 0; d < dim; ++d)
          ds.features(row, d) = out.anchors(c, d) + rng.gaussian(0.0, class_spread);
      }
    }
  };

  fill_split(out.train, profile.counts, Split::train);
  fill_split(out.test, std::vector<std::size_t>(num_classes, test_per_class), Split::test);
  return out;
}

/// Nearest-anchor reference classifier accuracy. With unit anchors this is
/// the maximum-likelihood rule for the generator above, so it bounds what a
/// trained model can reach on the same data.
inline double nearest_anchor_accuracy(const Dataset& ds, const DenseMatrix& anchors) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double* x = ds.features.row_ptr(i);
    std::size_t best = 0;
    double best_dot = -1e300;
    for (std::size_t c = 0; c < anchors.rows(); ++c) {
      double dot = 0.0;
      const double* a = anchors.row_ptr(c);
      for (std::size_t d = 0; d < ds.dim(); ++d) dot += x[d] * a[d];
      if (dot > best_dot) {
        best_dot = dot;
        best = c;
      }
    }
    if (best == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// ---------------------------------------------------------------------------
// CSV schema: one header line, then rows of  label,f0,...,f{D-1}
// Label is a nonnegative integer; features are finite doubles. Doubles are
// written with %.17g so a write/read roundtrip is value-exact.
// ---------------------------------------------------------------------------

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "label";
  for (std::size_t d = 0; d < ds.dim(); ++d) os << ",f" << d;
  os << "\n";
  char buf[40];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << ds.labels[i];
    for (std::size_t d = 0; d < ds.dim(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, d));
      os << ',' << buf;
    }
    os << "\n";
  }
  if (!os) throw IoError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path, Split split = Split::train) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset: " + path);

  std::string line;
  if (!std::getline(is, line)) throw DataError("empty dataset file: " + path);

  std::vector<double> values;
  std::vector<std::size_t> labels;
  std::size_t dim = 0;
  std::size_t line_no = 1;

  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t col = 0;
    std::size_t start = 0;
    std::size_t row_dim = 0;
    long long label = -1;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      const std::string field = line.substr(start, end - start);
      char* parse_end = nullptr;
      if (col == 0) {
        label = std::strtoll(field.c_str(), &parse_end, 10);
        if (parse_end == field.c_str() || *parse_end != '\0' || label < 0)
          throw DataError("parse error at line " + std::to_string(line_no) +
                          ": bad label '" + field + "'");
      } else {
        const double v = std::strtod(field.c_str(), &parse_end);
        if (parse_end == field.c_str() || *parse_end != '\0')
          throw DataError("parse error at line " + std::to_string(line_no) +
                          ": bad feature '" + field + "'");
        if (!std::isfinite(v))
          throw DataError("parse error at line " + std::to_string(line_no) +
                          ": non-finite feature");
        values.push_back(v);
        ++row_dim;
      }
      ++col;
      start = end + 1;
      if (end == line.size()) break;
    }
    if (dim == 0) {
      dim = row_dim;
      if (dim == 0)
        throw DataError("parse error at line " + std::to_string(line_no) + ": no features");
    } else if (row_dim != dim) {
      throw DataError("parse error at line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " features, got " + std::to_string(row_dim));
    }
    labels.push_back(static_cast<std::size_t>(label));
  }

  if (labels.empty()) throw DataError("empty dataset (header only): " + path);

  std::size_t num_classes = 0;
  for (std::size_t y : labels) num_classes = std::max(num_classes, y + 1);

  Dataset ds;
  ds.split = split;
  ds.labels = std::move(labels);
  ds.features = DenseMatrix(ds.labels.size(), dim);
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    for (std::size_t d = 0; d < dim; ++d) ds.features(i, d) = values[i * dim + d];

  auto hist = label_histogram(ds.labels, num_classes);
  for (std::size_t c = 0; c < num_classes; ++c)
    if (hist[c] == 0)
      throw DataError("schema error: class " + std::to_string(c) + " has no samples");
  ds.profile.counts = std::move(hist);
  validate_dataset(ds);
  return ds;
}

/// key=value summary of a profile, used in run reports.
inline std::string profile_summary(const ClassProfile& profile) {
  std::ostringstream os;
  os << "classes=" << profile.num_classes() << "\n";
  os << "total=" << profile.total() << "\n";
  os << "n_max=" << profile.n_max() << "\n";
  os << "n_min=" << profile.n_min() << "\n";
  os << "imbalance=" << profile.imbalance() << "\n";
  os << "counts=";
  for (std::size_t i = 0; i < profile.counts.size(); ++i) {
    if (i) os << ',';
    os << profile.counts[i];
  }
  os << "\n";
  return os.str();
}

}  // namespace gcl
