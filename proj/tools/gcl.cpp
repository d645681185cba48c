// Command-line front end: generate | train | eval | report | gradcheck.
//
// Every run directory receives the exact config (with the effective seed)
// needed to reproduce it. Outputs are written to temporary names and renamed
// into place so partial files never shadow finished ones.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gcl/checkpoint.hpp"
#include "gcl/dataset.hpp"
#include "gcl/gradcheck.hpp"
#include "gcl/metrics.hpp"
#include "gcl/run_config.hpp"
#include "gcl/trainer.hpp"

namespace fs = std::filesystem;
using namespace gcl;

namespace {

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os << content;
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_checkpoint_atomic(const Checkpoint& cp, const fs::path& path) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  save_checkpoint(cp, tmp.string());
  fs::rename(tmp, path);
}

struct LoadedData {
  Dataset train;
  Dataset test;
  bool has_test = false;
};

// Seed plan: the trainer consumes Rng(seed) directly; synthetic data and
// model init use derived lanes so the three streams never collide.
constexpr std::uint64_t kDataLane = 1;
constexpr std::uint64_t kInitLane = 2;

LoadedData load_data(const RunConfig& cfg) {
  LoadedData data;
  if (cfg.source == "csv") {
    data.train = load_dataset(cfg.train_path, Split::train);
    if (!cfg.test_path.empty()) {
      data.test = load_dataset(cfg.test_path, Split::test);
      data.has_test = true;
    }
  } else {
    auto profile = exponential_profile(cfg.n_max, cfg.imbalance, cfg.classes);
    Rng data_rng = Rng(cfg.train.seed).derive(kDataLane);
    auto syn = generate_synthetic(profile, cfg.dim, cfg.class_spread, data_rng, cfg.test_per_class);
    data.train = std::move(syn.train);
    data.test = std::move(syn.test);
    data.has_test = true;
  }
  return data;
}

Model build_model(const RunConfig& cfg, std::size_t input_dim, std::size_t classes) {
  Rng init_rng = Rng(cfg.train.seed).derive(kInitLane);
  return init_model(input_dim, cfg.hidden, cfg.feature_dim, classes, init_rng);
}

MetricsReport evaluate_with_metadata(const Model& model, const Dataset& test,
                                     const ClassProfile& train_profile, const RunConfig& cfg,
                                     const LossSpec& spec) {
  auto rep = evaluate(model, test, train_profile, cfg.thresholds, spec);
  rep.seed = cfg.train.seed;
  rep.loss_name = cfg.train.loss;
  rep.schedule_name = cfg.train.schedule;
  rep.sampler_name = cfg.train.stage2_sampler;
  return rep;
}

std::string loss_trace_csv(const TrainConfig& cfg, const std::vector<double>& trace) {
  std::ostringstream os;
  os << "iteration,loss,lr\n";
  os.precision(17);
  for (std::size_t i = 0; i < trace.size(); ++i)
    os << i << ',' << trace[i] << ',' << lr_at(cfg, i) << "\n";
  return os.str();
}

int cmd_generate(const RunConfig& cfg) {
  if (cfg.source != "synthetic")
    throw ConfigError("generate: data.source must be synthetic");
  auto data = load_data(cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  save_dataset(data.train, (out / "train.csv.tmp").string());
  fs::rename(out / "train.csv.tmp", out / "train.csv");
  save_dataset(data.test, (out / "test.csv.tmp").string());
  fs::rename(out / "test.csv.tmp", out / "test.csv");
  write_file_atomic(out / "profile.txt", profile_summary(data.train.profile));
  write_file_atomic(out / "config.cfg", run_config_to_string(cfg));
  std::cout << "generated " << data.train.size() << " train / " << data.test.size()
            << " test samples in " << out.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  auto data = load_data(cfg);
  Model model = build_model(cfg, data.train.dim(), data.train.num_classes());
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  write_file_atomic(out / "config.cfg", run_config_to_string(cfg));
  write_file_atomic(out / "profile.txt", profile_summary(data.train.profile));

  Trainer trainer(cfg.train, data.train, std::move(model));
  trainer.run_to(cfg.train.stage1_iters);
  save_checkpoint_atomic(
      Checkpoint{trainer.model(), cfg.train.seed, trainer.iteration(), std::nullopt},
      out / "stage1.ckpt");
  trainer.run_all();

  const fs::path final_tmp = out / "final.ckpt.tmp";
  trainer.save(final_tmp.string());
  fs::rename(final_tmp, out / "final.ckpt");
  write_file_atomic(out / "loss_trace.csv", loss_trace_csv(cfg.train, trainer.loss_trace()));

  if (data.has_test) {
    auto rep = evaluate_with_metadata(trainer.model(), data.test, data.train.profile, cfg,
                                      trainer.loss_spec());
    write_file_atomic(out / "metrics.txt", metrics_to_text(rep, data.train.profile));
    write_file_atomic(out / "metrics.csv", metrics_to_csv(rep));
    std::printf("overall=%.4f head=%.4f middle=%.4f tail=%.4f\n", rep.overall, rep.head,
                rep.middle, rep.tail);
  }
  std::cout << "run artifacts in " << out.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path, bool have_out) {
  Checkpoint cp = load_checkpoint(checkpoint_path);
  auto data = load_data(cfg);
  if (!data.has_test) throw ConfigError("eval: csv source needs data.test_path");
  LossSpec spec = build_loss_spec(cfg.train, data.train.profile);
  auto rep = evaluate_with_metadata(cp.model, data.test, data.train.profile, cfg, spec);
  const std::string text = metrics_to_text(rep, data.train.profile);
  if (have_out) {
    const fs::path out(cfg.out_dir);
    write_file_atomic(out / "metrics.txt", text);
    write_file_atomic(out / "metrics.csv", metrics_to_csv(rep));
    std::cout << "metrics in " << out.string() << "\n";
  } else {
    std::cout << text;
  }
  return 0;
}

std::map<std::string, std::string> read_metrics_keys(const fs::path& dir) {
  std::ifstream is(dir / "metrics.txt");
  if (!is) throw IoError("no metrics.txt in run directory: " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) break;  // table follows the key=value block
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_csv) {
  std::printf("%-28s %-16s %9s %9s %9s %9s\n", "run", "loss", "overall", "head", "middle",
              "tail");
  std::ostringstream csv;
  csv << "run,loss,overall,head,middle,tail\n";
  for (const auto& dir : run_dirs) {
    auto kv = read_metrics_keys(dir);
    auto get = [&](const char* k) { return kv.count(k) ? kv.at(k) : std::string("-"); };
    std::printf("%-28s %-16s %9.9s %9.9s %9.9s %9.9s\n", dir.c_str(), get("loss").c_str(),
                get("overall").c_str(), get("head").c_str(), get("middle").c_str(),
                get("tail").c_str());
    csv << dir << ',' << get("loss") << ',' << get("overall") << ',' << get("head") << ','
        << get("middle") << ',' << get("tail") << "\n";
  }
  if (!out_csv.empty()) write_file_atomic(out_csv, csv.str());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t instances) {
  const auto start = std::chrono::steady_clock::now();
  auto rows = run_gradient_suite(default_gradcheck_families(), instances, seed);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool all_pass = true;
  std::printf("%-18s %10s %14s %6s\n", "family", "instances", "max_rel_err", "ok");
  for (const auto& row : rows) {
    std::printf("%-18s %10zu %14.3e %6s\n", row.family.c_str(), row.instances, row.max_rel_err,
                row.pass ? "pass" : "FAIL");
    all_pass = all_pass && row.pass;
  }
  std::printf("gradcheck finished in %.2fs\n", secs);
  if (!all_pass) throw NumericError("gradient check failed");
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian clouded logit training and evaluation at desk scale"};
  app.require_subcommand(1);

  std::string config_path, out_dir, loss, sampler, schedule, checkpoint_path, report_csv;
  std::uint64_t seed = 0;
  std::size_t instances = 20;
  std::vector<std::string> run_dirs;

  auto add_common = [&](CLI::App* cmd, bool with_overrides) {
    cmd->add_option("--config", config_path, "config file (key=value sections)");
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_option("--out", out_dir, "output directory override");
    if (with_overrides) {
      cmd->add_option("--loss", loss, "loss family override");
      cmd->add_option("--sampler", sampler, "stage-2 sampler override");
      cmd->add_option("--schedule", schedule, "cloud schedule override");
    }
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic long-tailed dataset");
  add_common(gen, false);
  auto* train = app.add_subcommand("train", "run the two-stage training pipeline");
  add_common(train, true);
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, true);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  auto* report = app.add_subcommand("report", "tabulate metrics across run directories");
  report->add_option("dirs", run_dirs, "run directories")->required();
  report->add_option("--out", report_csv, "also write the table as CSV");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", seed, "suite seed");
  gradcheck->add_option("--instances", instances, "instances per loss family");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    const CLI::App* active = app.get_subcommands().front();
    auto passed = [&](const char* name) {
      const CLI::Option* opt = active->get_option_no_throw(name);
      return opt != nullptr && opt->count() > 0;
    };
    if (active == gen || active == train || active == eval) {
      if (passed("--seed")) cfg.train.seed = seed;
      if (passed("--out")) cfg.out_dir = out_dir;
      if (!loss.empty()) cfg.train.loss = loss;
      if (!sampler.empty()) cfg.train.stage2_sampler = sampler;
      if (!schedule.empty()) cfg.train.schedule = schedule;
    }

    if (gen->parsed()) {
      cfg.validate();
      return cmd_generate(cfg);
    }
    if (train->parsed()) {
      cfg.validate();
      return cmd_train(cfg);
    }
    if (eval->parsed()) {
      cfg.validate();
      return cmd_eval(cfg, checkpoint_path, passed("--out"));
    }
    if (report->parsed()) return cmd_report(run_dirs, report_csv);
    if (gradcheck->parsed()) return cmd_gradcheck(seed ? seed : 1234, instances);
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: config: %s\n", one_line(e.what()).c_str());
    return 2;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: config: %s\n", one_line(e.what()).c_str());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: data: %s\n", one_line(e.what()).c_str());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: numerical: %s\n", one_line(e.what()).c_str());
    return 4;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: io: %s\n", one_line(e.what()).c_str());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", one_line(e.what()).c_str());
    return 1;
  }
}
