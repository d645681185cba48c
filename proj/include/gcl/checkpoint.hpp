#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "gcl/errors.hpp"
#include "gcl/model.hpp"
#include "gcl/rng.hpp"

namespace gcl {

// ---------------------------------------------------------------------------
// Versioned binary checkpoint. All integers and doubles are written
// little-endian regardless of host byte order; doubles go through their
// IEEE-754 bit pattern, so a save/load roundtrip is bit-exact.
//
// Layout: magic "GCLCKPT1", version, dimensions, backbone tensors (weights
// and biases per layer), classifier, seed, iteration, then an optional
// trainer-state block (velocity tensors + serialized Rng state) that makes a
// resumed run indistinguishable from an uninterrupted one.
// ---------------------------------------------------------------------------

namespace ckpt {

constexpr char kMagic[8] = {'G', 'C', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

// Upper bound on any stored dimension; a corrupt length field fails cleanly
// instead of attempting a giant allocation.
constexpr std::uint32_t kMaxDim = 1u << 24;

inline std::uint32_t read_dim(std::istream& is) {
  const std::uint32_t v = read_u32(is);
  if (v > kMaxDim) throw IoError("checkpoint: implausible dimension " + std::to_string(v));
  return v;
}

inline void write_matrix(std::ostream& os, const DenseMatrix& m) {
  write_u32(os, static_cast<std::uint32_t>(m.rows()));
  write_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) write_f64(os, v);
}

inline DenseMatrix read_matrix(std::istream& is) {
  const std::uint32_t rows = read_dim(is), cols = read_dim(is);
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = read_f64(is);
  return m;
}

inline void write_vector(std::ostream& os, const DenseVector& v) {
  write_u32(os, static_cast<std::uint32_t>(v.size()));
  for (double x : v) write_f64(os, x);
}

inline DenseVector read_vector(std::istream& is) {
  const std::uint32_t n = read_dim(is);
  DenseVector v(n);
  for (double& x : v) x = read_f64(is);
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw IoError("checkpoint: truncated file");
  return s;
}

}  // namespace ckpt

struct TrainerState {
  GradientSet velocity;
  Rng rng{0};
};

struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  std::optional<TrainerState> trainer;
};

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open for writing: " + path);
  os.write(ckpt::kMagic, 8);
  ckpt::write_u32(os, ckpt::kVersion);

  const Model& m = cp.model;
  ckpt::write_u32(os, static_cast<std::uint32_t>(m.input_dim));
  ckpt::write_u32(os, static_cast<std::uint32_t>(m.hidden.size()));
  for (std::size_t h : m.hidden) ckpt::write_u32(os, static_cast<std::uint32_t>(h));
  ckpt::write_u32(os, static_cast<std::uint32_t>(m.feature_dim));
  ckpt::write_u32(os, static_cast<std::uint32_t>(m.num_classes));

  for (std::size_t k = 0; k < m.num_layers(); ++k) {
    ckpt::write_matrix(os, m.weights[k]);
    ckpt::write_vector(os, m.biases[k]);
  }
  ckpt::write_matrix(os, m.classifier);
  ckpt::write_u64(os, cp.seed);
  ckpt::write_u64(os, cp.iteration);

  os.put(cp.trainer ? 1 : 0);
  if (cp.trainer) {
    const auto& t = *cp.trainer;
    for (std::size_t k = 0; k < t.velocity.weight_grads.size(); ++k) {
      ckpt::write_matrix(os, t.velocity.weight_grads[k]);
      ckpt::write_vector(os, t.velocity.bias_grads[k]);
    }
    ckpt::write_matrix(os, t.velocity.classifier_grad);
    std::ostringstream rng_state;
    t.rng.save(rng_state);
    ckpt::write_string(os, rng_state.str());
  }
  if (!os) throw IoError("checkpoint: write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint not found: " + path);

  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, ckpt::kMagic, 8) != 0)
    throw IoError("checkpoint: bad magic bytes: " + path);
  const std::uint32_t version = ckpt::read_u32(is);
  if (version != ckpt::kVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint cp;
  Model& m = cp.model;
  m.input_dim = ckpt::read_dim(is);
  const std::uint32_t n_hidden = ckpt::read_dim(is);
  m.hidden.resize(n_hidden);
  for (auto& h : m.hidden) h = ckpt::read_dim(is);
  m.feature_dim = ckpt::read_dim(is);
  m.num_classes = ckpt::read_dim(is);

  const std::size_t layers = n_hidden + 1;
  for (std::size_t k = 0; k < layers; ++k) {
    m.weights.push_back(ckpt::read_matrix(is));
    m.biases.push_back(ckpt::read_vector(is));
  }
  m.classifier = ckpt::read_matrix(is);
  cp.seed = ckpt::read_u64(is);
  cp.iteration = ckpt::read_u64(is);

  const int has_trainer = is.get();
  if (has_trainer == std::char_traits<char>::eof()) throw IoError("checkpoint: truncated file");
  if (has_trainer) {
    TrainerState t;
    for (std::size_t k = 0; k < layers; ++k) {
      t.velocity.weight_grads.push_back(ckpt::read_matrix(is));
      t.velocity.bias_grads.push_back(ckpt::read_vector(is));
    }
    t.velocity.classifier_grad = ckpt::read_matrix(is);
    std::istringstream rng_state(ckpt::read_string(is));
    t.rng.load(rng_state);
    cp.trainer = std::move(t);
  }
  return cp;
}

}  // namespace gcl
