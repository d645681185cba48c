#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <vector>

#include "gcl/errors.hpp"

namespace gcl {

/// Seeded random source with a fully pinned sample stream.
///
/// The engine is std::mt19937_64, whose output sequence is specified by the
/// C++ standard, so the raw 64-bit stream is identical on every platform.
/// All derived draws use fixed transforms of that stream:
///
///   uniform()      one engine output x; returns (x >> 11) * 2^-53, in [0,1)
///   uniform_pos()  one engine output x; returns ((x >> 11) + 1) * 2^-53, in (0,1]
///   gaussian()     exactly two engine outputs u1 = uniform_pos(), u2 = uniform();
///                  returns mu + sigma * sqrt(-2 ln u1) * cos(2 pi u2)
///                  (Box-Muller, second branch discarded so no hidden state)
///
/// Interleaving uniform and Gaussian draws is therefore reproducible: the
/// stream position advances by one output per uniform and two per Gaussian.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform_pos() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double gaussian(double mu = 0.0, double sigma = 1.0) {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Index uniform in [0, n).
  std::size_t index_below(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Independent stream for parallel lanes (e.g. per-class generation);
  /// lane k gets a seed mixed through splitmix64 so streams do not overlap.
  Rng derive(std::uint64_t lane) const {
    std::uint64_t z = seed_ + (lane + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

  void save(std::ostream& os) const { os << seed_ << ' ' << engine_; }
  void load(std::istream& is) { is >> seed_ >> engine_; }

  bool operator==(const Rng& other) const {
    return seed_ == other.seed_ && engine_ == other.engine_;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// n Gaussian draws from N(mu, sigma^2), each clamped into [lo, hi].
inline std::vector<double> sample_clamped_gaussian(Rng& rng, double mu, double sigma,
                                                   double lo, double hi, std::size_t n) {
  if (!(sigma > 0.0)) throw InvalidArgument("sample_clamped_gaussian: sigma must be > 0");
  if (!(lo < hi)) throw InvalidArgument("sample_clamped_gaussian: empty clamp range");
  if (n < 1) throw InvalidArgument("sample_clamped_gaussian: n must be >= 1");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = rng.gaussian(mu, sigma);
    out[i] = v < lo ? lo : (v > hi ? hi : v);
  }
  return out;
}

inline double clamped_gaussian(Rng& rng, double mu, double sigma, double lo, double hi) {
  const double v = rng.gaussian(mu, sigma);
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace gcl
