#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gcl/checkpoint.hpp"
#include "gcl/gradcheck.hpp"
#include "gcl/model.hpp"

using namespace gcl;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  auto dir = fs::temp_directory_path() / "gcl_model_tests";
  fs::create_directories(dir);
  return dir / name;
}

bool models_bitwise_equal(const Model& a, const Model& b) {
  if (a.classifier.data() != b.classifier.data()) return false;
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t k = 0; k < a.weights.size(); ++k) {
    if (a.weights[k].data() != b.weights[k].data()) return false;
    if (a.biases[k] != b.biases[k]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("model init is seed-deterministic") {
  Rng a(404), b(404);
  auto m1 = init_model(8, {16}, 4, 5, a);
  auto m2 = init_model(8, {16}, 4, 5, b);
  REQUIRE(models_bitwise_equal(m1, m2));

  Rng c(405);
  auto m3 = init_model(8, {16}, 4, 5, c);
  REQUIRE_FALSE(models_bitwise_equal(m1, m3));
}

TEST_CASE("parameter count matches the closed form") {
  Rng rng(1);
  auto m = init_model(8, {16, 12}, 4, 5, rng);
  // (8*16 + 16) + (16*12 + 12) + (12*4 + 4) + 4*5
  REQUIRE(m.parameter_count() == 8 * 16 + 16 + 16 * 12 + 12 + 12 * 4 + 4 + 4 * 5);

  auto linear = init_model(6, {}, 3, 4, rng);
  REQUIRE(linear.parameter_count() == 6 * 3 + 3 + 3 * 4);
}

TEST_CASE("classifier anchors initialize to unit length") {
  Rng rng(9);
  auto m = init_model(5, {7}, 6, 10, rng);
  for (std::size_t j = 0; j < 10; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < 6; ++d) acc += m.classifier(d, j) * m.classifier(d, j);
    REQUIRE(std::sqrt(acc) == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("zero-hidden model is the plain affine map") {
  Rng rng(12);
  auto m = init_model(4, {}, 3, 2, rng);
  DenseMatrix x(5, 4);
  for (auto& v : x.data()) v = rng.gaussian();
  auto f = forward(m, x);
  auto expected = matmul(x, m.weights[0]);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      REQUIRE(f(i, j) == Catch::Approx(expected(i, j) + m.biases[0][j]).margin(1e-15));
}

TEST_CASE("forward rows are independent") {
  Rng rng(13);
  auto m = init_model(6, {9}, 4, 3, rng);
  DenseMatrix one(1, 6), many(8, 6);
  for (auto& v : many.data()) v = rng.gaussian();
  for (std::size_t d = 0; d < 6; ++d) one(0, d) = many(0, d);
  auto f1 = forward(m, one);
  auto f8 = forward(m, many);
  for (std::size_t d = 0; d < 4; ++d) REQUIRE(f1(0, d) == f8(0, d));
  REQUIRE(f8.all_finite());

  DenseMatrix wrong(2, 5);
  REQUIRE_THROWS_AS(forward(m, wrong), InvalidArgument);
}

TEST_CASE("backbone backward matches finite differences") {
  // Covered per loss family in the loss tests; here the raw backbone chain
  // is checked through a quadratic head so the model module stands alone.
  Rng rng(2025);
  auto m = init_model(5, {6}, 4, 3, rng);
  DenseMatrix x(3, 5);
  for (auto& v : x.data()) v = rng.gaussian();

  auto scalar_loss = [&](const Model& model) {
    auto f = forward(model, x);
    double acc = 0.0;
    for (double v : f.data()) acc += v * v;
    return 0.5 * acc;
  };

  ForwardCache cache;
  auto f = forward(m, x, &cache);
  DenseMatrix dfeat = f;  // d(0.5 sum f^2)/df = f
  auto grads = backward(m, cache, dfeat, DenseMatrix(4, 3));

  const double h = 1e-6;
  auto params = collect_parameters(m);
  auto flat = flatten_gradients(grads);
  // Skip classifier entries (they do not feed this head).
  const std::size_t backbone_params = params.size() - m.classifier.size();
  for (std::size_t p = 0; p < backbone_params; ++p) {
    const double saved = *params[p];
    *params[p] = saved + h;
    const double up = scalar_loss(m);
    *params[p] = saved - h;
    const double down = scalar_loss(m);
    *params[p] = saved;
    const double numeric = (up - down) / (2 * h);
    REQUIRE(flat[p] == Catch::Approx(numeric).margin(1e-5));
  }
}

TEST_CASE("zero upstream gradient gives a zero gradient set") {
  Rng rng(3);
  auto m = init_model(4, {5}, 3, 2, rng);
  DenseMatrix x(2, 4);
  for (auto& v : x.data()) v = rng.gaussian();
  ForwardCache cache;
  forward(m, x, &cache);
  auto grads = backward(m, cache, DenseMatrix(2, 3), DenseMatrix(3, 2));
  for (const auto& w : grads.weight_grads)
    for (double v : w.data()) REQUIRE(v == 0.0);
  for (const auto& b : grads.bias_grads)
    for (double v : b) REQUIRE(v == 0.0);
  for (double v : grads.classifier_grad.data()) REQUIRE(v == 0.0);

  // Gradient shapes are congruent with the model.
  REQUIRE(grads.weight_grads.size() == m.weights.size());
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    REQUIRE(grads.weight_grads[k].same_shape(m.weights[k]));
    REQUIRE(grads.bias_grads[k].size() == m.biases[k].size());
  }
  REQUIRE(grads.classifier_grad.same_shape(m.classifier));
}

TEST_CASE("stale caches are rejected") {
  Rng rng(4);
  auto m = init_model(4, {}, 3, 2, rng);
  DenseMatrix x(2, 4, 0.5);
  ForwardCache cache;
  forward(m, x, &cache);
  auto grads = backward(m, cache, DenseMatrix(2, 3), DenseMatrix(3, 2));
  auto velocity = zero_gradients(m);
  sgd_step(m, grads, 0.1, 0.0, velocity);
  REQUIRE_THROWS_AS(backward(m, cache, DenseMatrix(2, 3), DenseMatrix(3, 2)), InvalidArgument);
}

TEST_CASE("momentum zero reduces to plain sgd") {
  Rng rng(6);
  auto m = init_model(3, {}, 2, 2, rng);
  auto before = m;
  auto grads = zero_gradients(m);
  for (auto& v : grads.weight_grads[0].data()) v = 1.0;
  auto velocity = zero_gradients(m);
  sgd_step(m, grads, 0.25, 0.0, velocity);
  for (std::size_t i = 0; i < m.weights[0].size(); ++i)
    REQUIRE(m.weights[0].data()[i] == before.weights[0].data()[i] - 0.25);
}

TEST_CASE("two identical steps from identical state match") {
  Rng rng(7);
  auto m1 = init_model(4, {5}, 3, 3, rng);
  auto m2 = m1;
  auto grads = zero_gradients(m1);
  for (auto& w : grads.weight_grads)
    for (auto& v : w.data()) v = 0.01;
  for (auto& v : grads.classifier_grad.data()) v = -0.02;
  auto v1 = zero_gradients(m1), v2 = zero_gradients(m2);
  sgd_step(m1, grads, 0.1, 0.9, v1);
  sgd_step(m1, grads, 0.1, 0.9, v1);
  sgd_step(m2, grads, 0.1, 0.9, v2);
  sgd_step(m2, grads, 0.1, 0.9, v2);
  REQUIRE(models_bitwise_equal(m1, m2));
}

TEST_CASE("freeze_backbone leaves backbone bytes untouched") {
  Rng rng(8);
  auto m = init_model(4, {6}, 3, 3, rng);
  auto before = m;
  auto grads = zero_gradients(m);
  for (auto& w : grads.weight_grads)
    for (auto& v : w.data()) v = 5.0;
  for (auto& b : grads.bias_grads)
    for (auto& v : b) v = 5.0;
  for (auto& v : grads.classifier_grad.data()) v = 1.0;
  auto velocity = zero_gradients(m);
  sgd_step(m, grads, 0.1, 0.9, velocity, /*freeze_backbone=*/true);

  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    REQUIRE(m.weights[k].data() == before.weights[k].data());
    REQUIRE(m.biases[k] == before.biases[k]);
    for (double v : velocity.weight_grads[k].data()) REQUIRE(v == 0.0);
  }
  bool classifier_moved = false;
  for (std::size_t i = 0; i < m.classifier.size(); ++i)
    classifier_moved |= m.classifier.data()[i] != before.classifier.data()[i];
  REQUIRE(classifier_moved);
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
  Rng rng(2222);
  Checkpoint cp;
  cp.model = init_model(7, {9, 5}, 4, 6, rng);
  cp.seed = 987654321;
  cp.iteration = 1234;
  TrainerState state;
  state.velocity = zero_gradients(cp.model);
  for (auto& w : state.velocity.weight_grads)
    for (auto& v : w.data()) v = rng.gaussian();
  state.rng = Rng(55);
  for (int i = 0; i < 9; ++i) state.rng.uniform();
  cp.trainer = state;

  auto path = temp_file("roundtrip.ckpt");
  save_checkpoint(cp, path.string());
  auto back = load_checkpoint(path.string());

  REQUIRE(models_bitwise_equal(back.model, cp.model));
  REQUIRE(back.seed == cp.seed);
  REQUIRE(back.iteration == cp.iteration);
  REQUIRE(back.trainer.has_value());
  for (std::size_t k = 0; k < state.velocity.weight_grads.size(); ++k)
    REQUIRE(back.trainer->velocity.weight_grads[k].data() ==
            state.velocity.weight_grads[k].data());
  REQUIRE(back.trainer->rng == state.rng);

  // The restored rng continues the exact stream.
  Rng expect = state.rng;
  REQUIRE(back.trainer->rng.uniform() == expect.uniform());
}

TEST_CASE("corrupt or truncated checkpoints fail to load") {
  auto path = temp_file("corrupt.ckpt");
  std::ofstream(path, std::ios::binary) << "NOTACKPTxxxxxxxxxxxx";
  REQUIRE_THROWS_AS(load_checkpoint(path.string()), IoError);

  Rng rng(1);
  Checkpoint cp;
  cp.model = init_model(3, {}, 2, 2, rng);
  auto good = temp_file("good.ckpt");
  save_checkpoint(cp, good.string());
  auto truncated = temp_file("truncated.ckpt");
  {
    std::ifstream in(good, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(truncated, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  REQUIRE_THROWS_AS(load_checkpoint(truncated.string()), IoError);
  REQUIRE_THROWS_AS(load_checkpoint("/no/such/file.ckpt"), IoError);

  // A corrupt dimension field must fail cleanly, not allocate wildly.
  auto bad_dim = temp_file("bad_dim.ckpt");
  {
    std::ifstream in(good, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (int i = 12; i < 16; ++i) bytes[i] = '\xff';  // input_dim field
    std::ofstream out(bad_dim, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  REQUIRE_THROWS_AS(load_checkpoint(bad_dim.string()), IoError);
}
