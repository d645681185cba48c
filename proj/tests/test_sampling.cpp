#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "gcl/sampler.hpp"

using namespace gcl;

TEST_CASE("effective numbers at the boundary betas") {
  ClassProfile p{{300, 100, 7}};
  auto en0 = effective_numbers(p, 0.0);
  for (double v : en0) REQUIRE(v == 1.0);

  // beta -> 1 limit recovers the raw counts.
  auto en1 = effective_numbers(p, 0.999999);
  for (std::size_t j = 0; j < p.num_classes(); ++j)
    REQUIRE(en1[j] == Catch::Approx(static_cast<double>(p.counts[j])).epsilon(1e-3));
}

TEST_CASE("effective number against a high-precision oracle") {
  // (1 - 0.99^100) / 0.01 evaluated in extended precision.
  const long double oracle = (1.0L - std::pow(0.99L, 100.0L)) / 0.01L;
  ClassProfile p{{100}};
  auto en = effective_numbers(p, 0.99);
  REQUIRE(en[0] == Catch::Approx(static_cast<double>(oracle)).margin(1e-9));
  REQUIRE(en[0] == Catch::Approx(63.397).margin(1e-3));
  REQUIRE_THROWS_AS(effective_numbers(p, 1.0), InvalidArgument);
  REQUIRE_THROWS_AS(effective_numbers(p, -0.1), InvalidArgument);
}

static double class_probability(const SampleProbabilities& probs, const ClassProfile& p,
                                std::size_t cls) {
  // Canonical layout groups samples by class.
  std::size_t begin = 0;
  for (std::size_t j = 0; j < cls; ++j) begin += p.counts[j];
  double total = 0.0;
  for (std::size_t i = 0; i < p.counts[cls]; ++i) total += probs.per_sample[begin + i];
  return total;
}

TEST_CASE("class-balanced probabilities give every class the same share") {
  ClassProfile p{{300, 100, 100}};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::class_balanced});
  for (std::size_t c = 0; c < 3; ++c)
    REQUIRE(class_probability(probs, p, c) == Catch::Approx(1.0 / 3.0).margin(1e-12));
  double sum = 0.0;
  for (double v : probs.per_sample) sum += v;
  REQUIRE(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("instance-balanced probabilities are uniform") {
  ClassProfile p{{400, 100}};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::instance_balanced});
  REQUIRE(probs.size() == 500);
  for (double v : probs.per_sample) REQUIRE(v == Catch::Approx(1.0 / 500.0).margin(1e-15));
}

TEST_CASE("square-root sampler splits 400:100 as 2:1") {
  ClassProfile p{{400, 100}};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::square_root});
  REQUIRE(class_probability(probs, p, 0) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  REQUIRE(class_probability(probs, p, 1) == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("effective-number sampler interpolates between ibs and cbs") {
  ClassProfile p{{512, 77, 13, 4}};
  auto ibs = sampling_probabilities(p, SamplerSpec{SamplerKind::instance_balanced});
  auto ens0 = sampling_probabilities(p, SamplerSpec{SamplerKind::effective_number, 0.0});
  for (std::size_t i = 0; i < ibs.size(); ++i)
    REQUIRE(ens0.per_sample[i] == Catch::Approx(ibs.per_sample[i]).margin(1e-12));

  auto cbs = sampling_probabilities(p, SamplerSpec{SamplerKind::class_balanced});
  auto ens1 = sampling_probabilities(p, SamplerSpec{SamplerKind::effective_number, 0.999999});
  for (std::size_t i = 0; i < cbs.size(); ++i)
    REQUIRE(ens1.per_sample[i] == Catch::Approx(cbs.per_sample[i]).margin(1e-3));
}

TEST_CASE("probabilities can follow a dataset ordering") {
  ClassProfile p{{2, 1}};
  std::vector<std::size_t> labels{1, 0, 0};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::class_balanced}, labels);
  REQUIRE(probs.per_sample[0] == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(probs.per_sample[1] == Catch::Approx(0.25).margin(1e-12));
  REQUIRE(probs.per_sample[2] == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("degenerate single-sample population repeats index zero") {
  ClassProfile p{{1}};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::instance_balanced});
  Rng rng(8);
  auto batch = draw_batch(probs, 16, rng);
  for (auto idx : batch) REQUIRE(idx == 0);
}

TEST_CASE("class-balanced empirical frequencies over 1e5 draws") {
  ClassProfile p{{300, 100, 100}};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::class_balanced});
  Rng rng(314159);
  const std::size_t draws = 100000;
  auto batch = draw_batch(probs, draws, rng);

  std::vector<std::size_t> per_class(3, 0);
  for (auto idx : batch) {
    const std::size_t cls = idx < 300 ? 0 : (idx < 400 ? 1 : 2);
    ++per_class[cls];
  }
  // Binomial 3-sigma bound: 3 * sqrt(p(1-p)/n) ~ 0.0045 < 0.01.
  for (std::size_t c = 0; c < 3; ++c) {
    const double freq = static_cast<double>(per_class[c]) / draws;
    REQUIRE(freq == Catch::Approx(1.0 / 3.0).margin(0.01));
  }
}

TEST_CASE("batch drawing is deterministic under the seed") {
  ClassProfile p{{40, 10, 4}};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::class_balanced});
  Rng a(21), b(21);
  REQUIRE(draw_batch(probs, 64, a) == draw_batch(probs, 64, b));
}

TEST_CASE("without-replacement draws are unique and bounded") {
  ClassProfile p{{6, 3}};
  auto probs = sampling_probabilities(p, SamplerSpec{SamplerKind::instance_balanced});
  Rng rng(99);
  auto batch = draw_batch(probs, 9, rng, false);
  std::set<std::size_t> uniq(batch.begin(), batch.end());
  REQUIRE(uniq.size() == 9);
  REQUIRE_THROWS_AS(draw_batch(probs, 10, rng, false), InvalidArgument);
}

TEST_CASE("sampler spec strings parse") {
  REQUIRE(SamplerSpec::parse("ibs").kind == SamplerKind::instance_balanced);
  REQUIRE(SamplerSpec::parse("srs").kind == SamplerKind::square_root);
  REQUIRE(SamplerSpec::parse("cbs").kind == SamplerKind::class_balanced);
  auto ens = SamplerSpec::parse("ens:0.99");
  REQUIRE(ens.kind == SamplerKind::effective_number);
  REQUIRE(ens.beta == Catch::Approx(0.99));
  REQUIRE_THROWS_AS(SamplerSpec::parse("ens:1.0"), ConfigError);
  REQUIRE_THROWS_AS(SamplerSpec::parse("ens:x"), ConfigError);
  REQUIRE_THROWS_AS(SamplerSpec::parse("mystery"), ConfigError);
}
