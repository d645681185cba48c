#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "gcl/run_config.hpp"

using namespace gcl;

TEST_CASE("run config parses sections, comments and whitespace") {
  std::istringstream is(R"(
# benchmark run
[data]
source = synthetic
classes = 10
n_max = 500
imbalance = 100   # requested ratio
dim = 32
class_spread = 0.45

[model]
hidden = 64,32
feature_dim = 48

[train]
stage1_iters = 3000
stage2_iters = 500
batch = 64
lr = 0.1
milestones = 1800,2600
loss = gcl-a
schedule = pow:1/4
sampler = ens:0.999
seed = 11

[cloud]
scale = 24

[eval]
head_min = 100
quantile_groups = true

[output]
dir = runs/demo
)");
  auto cfg = parse_run_config(is);
  REQUIRE(cfg.classes == 10);
  REQUIRE(cfg.imbalance == 100.0);
  REQUIRE(cfg.hidden == std::vector<std::size_t>{64, 32});
  REQUIRE(cfg.feature_dim == 48);
  REQUIRE(cfg.train.milestones == std::vector<std::size_t>{1800, 2600});
  REQUIRE(cfg.train.loss == "gcl-a");
  REQUIRE(cfg.train.schedule == "pow:1/4");
  REQUIRE(cfg.train.stage2_sampler == "ens:0.999");
  REQUIRE(cfg.train.seed == 11);
  REQUIRE(cfg.train.cloud.scale == 24.0);
  REQUIRE(cfg.thresholds.force_quantiles);
  REQUIRE(cfg.out_dir == "runs/demo");
  REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("emitted configs reload to an equivalent run") {
  RunConfig cfg;
  cfg.classes = 7;
  cfg.n_max = 320;
  cfg.imbalance = 40.0;
  cfg.hidden = {48};
  cfg.train.loss = "cosface:0.2";
  cfg.train.milestones = {100, 200};
  cfg.train.cloud.sigma = 0.25;
  cfg.train.cloud.per_class_draw = true;
  cfg.thresholds.head_min = 77;
  cfg.out_dir = "runs/x";

  std::istringstream is(run_config_to_string(cfg));
  auto back = parse_run_config(is);
  REQUIRE(back.classes == cfg.classes);
  REQUIRE(back.n_max == cfg.n_max);
  REQUIRE(back.imbalance == cfg.imbalance);
  REQUIRE(back.hidden == cfg.hidden);
  REQUIRE(back.train.loss == cfg.train.loss);
  REQUIRE(back.train.milestones == cfg.train.milestones);
  REQUIRE(back.train.cloud.sigma == cfg.train.cloud.sigma);
  REQUIRE(back.train.cloud.per_class_draw == cfg.train.cloud.per_class_draw);
  REQUIRE(back.thresholds.head_min == cfg.thresholds.head_min);
  REQUIRE(back.out_dir == cfg.out_dir);
  REQUIRE(run_config_to_string(back) == run_config_to_string(cfg));
}

TEST_CASE("unknown keys and malformed lines are config errors") {
  std::istringstream bad_key("[data]\nsauce = synthetic\n");
  REQUIRE_THROWS_AS(parse_run_config(bad_key), ConfigError);

  std::istringstream no_eq("[data]\nsource synthetic\n");
  REQUIRE_THROWS_AS(parse_run_config(no_eq), ConfigError);

  std::istringstream bad_section("[data\nsource = synthetic\n");
  REQUIRE_THROWS_AS(parse_run_config(bad_section), ConfigError);

  std::istringstream bad_num("[train]\nbatch = many\n");
  REQUIRE_THROWS_AS(parse_run_config(bad_num), ConfigError);

  REQUIRE_THROWS_AS(load_run_config("/no/such/config.cfg"), IoError);
}

TEST_CASE("config validation catches bad combinations") {
  RunConfig cfg;
  cfg.source = "csv";
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);

  RunConfig cfg2;
  cfg2.source = "flowers";
  REQUIRE_THROWS_AS(cfg2.validate(), ConfigError);

  RunConfig cfg3;
  cfg3.train.loss = "unheard-of";
  REQUIRE_THROWS_AS(cfg3.validate(), ConfigError);
}
