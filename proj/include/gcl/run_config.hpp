#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gcl/errors.hpp"
#include "gcl/metrics.hpp"
#include "gcl/trainer.hpp"

namespace gcl {

// ---------------------------------------------------------------------------
// Run configuration: a line-oriented key=value file with [section] headers.
// '#' starts a comment; whitespace around keys and values is ignored. An
// emitted config reparses to an equivalent run.
// ---------------------------------------------------------------------------

struct RunConfig {
  // [data]
  std::string source = "synthetic";  // "synthetic" | "csv"
  std::size_t classes = 10;
  std::size_t n_max = 500;
  double imbalance = 100.0;
  std::size_t dim = 32;
  double class_spread = 0.45;
  std::size_t test_per_class = 100;
  std::string train_path;
  std::string test_path;

  // [model]
  std::vector<std::size_t> hidden = {64};
  std::size_t feature_dim = 64;

  // [train]
  TrainConfig train;

  // [eval]
  GroupThresholds thresholds;

  // [output]
  std::string out_dir = "runs/out";

  void validate() const {
    if (source != "synthetic" && source != "csv")
      throw ConfigError("config: data.source must be synthetic or csv");
    if (source == "csv" && train_path.empty())
      throw ConfigError("config: data.train_path required for csv source");
    if (source == "synthetic") {
      if (classes < 2) throw ConfigError("config: data.classes must be >= 2");
      if (!(imbalance >= 1.0)) throw ConfigError("config: data.imbalance must be >= 1");
      if (dim < 2) throw ConfigError("config: data.dim must be >= 2");
      if (!(class_spread > 0.0)) throw ConfigError("config: data.class_spread must be > 0");
    }
    if (feature_dim < 1) throw ConfigError("config: model.feature_dim must be >= 1");
    train.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& key) {
  std::vector<std::size_t> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const long long v = std::stoll(trim(item));
      if (v < 0) throw ConfigError("config: negative value in " + key);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config: cannot parse '" + item + "' in " + key);
    }
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse number '" + s + "' for " + key);
  }
}

inline std::size_t parse_size(const std::string& s, const std::string& key) {
  try {
    const long long v = std::stoll(s);
    if (v < 0) throw ConfigError("config: " + key + " must be nonnegative");
    return static_cast<std::size_t>(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse integer '" + s + "' for " + key);
  }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: cannot parse boolean '" + s + "' for " + key);
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& is, const std::string& origin = "<config>") {
  RunConfig cfg;
  std::string section, line;
  std::size_t line_no = 0;

  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: bad section at " + origin + ":" + std::to_string(line_no));
      section = line.substr(1, line.size() - 2);
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key=value at " + origin + ":" + std::to_string(line_no));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const std::string qkey = section + "." + key;

    using namespace detail;
    if (qkey == "data.source") cfg.source = value;
    else if (qkey == "data.classes") cfg.classes = parse_size(value, qkey);
    else if (qkey == "data.n_max") cfg.n_max = parse_size(value, qkey);
    else if (qkey == "data.imbalance") cfg.imbalance = parse_double(value, qkey);
    else if (qkey == "data.dim") cfg.dim = parse_size(value, qkey);
    else if (qkey == "data.class_spread") cfg.class_spread = parse_double(value, qkey);
    else if (qkey == "data.test_per_class") cfg.test_per_class = parse_size(value, qkey);
    else if (qkey == "data.train_path") cfg.train_path = value;
    else if (qkey == "data.test_path") cfg.test_path = value;
    else if (qkey == "model.hidden") cfg.hidden = parse_size_list(value, qkey);
    else if (qkey == "model.feature_dim") cfg.feature_dim = parse_size(value, qkey);
    else if (qkey == "train.stage1_iters") cfg.train.stage1_iters = parse_size(value, qkey);
    else if (qkey == "train.stage2_iters") cfg.train.stage2_iters = parse_size(value, qkey);
    else if (qkey == "train.batch") cfg.train.batch = parse_size(value, qkey);
    else if (qkey == "train.lr") cfg.train.base_lr = parse_double(value, qkey);
    else if (qkey == "train.gamma") cfg.train.gamma = parse_double(value, qkey);
    else if (qkey == "train.milestones") cfg.train.milestones = parse_size_list(value, qkey);
    else if (qkey == "train.warmup") cfg.train.warmup_iters = parse_size(value, qkey);
    else if (qkey == "train.momentum") cfg.train.momentum = parse_double(value, qkey);
    else if (qkey == "train.loss") cfg.train.loss = value;
    else if (qkey == "train.schedule") cfg.train.schedule = value;
    else if (qkey == "train.sampler") cfg.train.stage2_sampler = value;
    else if (qkey == "train.seed") cfg.train.seed = parse_size(value, qkey);
    else if (qkey == "cloud.mu") cfg.train.cloud.mu = parse_double(value, qkey);
    else if (qkey == "cloud.sigma") cfg.train.cloud.sigma = parse_double(value, qkey);
    else if (qkey == "cloud.clamp_lo") cfg.train.cloud.clamp_lo = parse_double(value, qkey);
    else if (qkey == "cloud.clamp_hi") cfg.train.cloud.clamp_hi = parse_double(value, qkey);
    else if (qkey == "cloud.angular_scale") cfg.train.cloud.angular_scale = parse_double(value, qkey);
    else if (qkey == "cloud.scale") cfg.train.cloud.scale = parse_double(value, qkey);
    else if (qkey == "cloud.per_class_draw") cfg.train.cloud.per_class_draw = parse_bool(value, qkey);
    else if (qkey == "eval.head_min") cfg.thresholds.head_min = parse_size(value, qkey);
    else if (qkey == "eval.mid_min") cfg.thresholds.mid_min = parse_size(value, qkey);
    else if (qkey == "eval.quantile_groups") cfg.thresholds.force_quantiles = parse_bool(value, qkey);
    else if (qkey == "output.dir") cfg.out_dir = value;
    else
      throw ConfigError("config: unknown key '" + qkey + "' at " + origin + ":" +
                        std::to_string(line_no));
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  return parse_run_config(is, path);
}

inline std::string run_config_to_string(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "[data]\n";
  os << "source = " << cfg.source << "\n";
  if (cfg.source == "csv") {
    os << "train_path = " << cfg.train_path << "\n";
    if (!cfg.test_path.empty()) os << "test_path = " << cfg.test_path << "\n";
  } else {
    os << "classes = " << cfg.classes << "\n";
    os << "n_max = " << cfg.n_max << "\n";
    os << "imbalance = " << cfg.imbalance << "\n";
    os << "dim = " << cfg.dim << "\n";
    os << "class_spread = " << cfg.class_spread << "\n";
    os << "test_per_class = " << cfg.test_per_class << "\n";
  }
  os << "\n[model]\n";
  os << "hidden = ";
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) os << (i ? "," : "") << cfg.hidden[i];
  os << "\n";
  os << "feature_dim = " << cfg.feature_dim << "\n";
  os << "\n[train]\n";
  os << "stage1_iters = " << cfg.train.stage1_iters << "\n";
  os << "stage2_iters = " << cfg.train.stage2_iters << "\n";
  os << "batch = " << cfg.train.batch << "\n";
  os << "lr = " << cfg.train.base_lr << "\n";
  os << "gamma = " << cfg.train.gamma << "\n";
  os << "milestones = ";
  for (std::size_t i = 0; i < cfg.train.milestones.size(); ++i)
    os << (i ? "," : "") << cfg.train.milestones[i];
  os << "\n";
  os << "warmup = " << cfg.train.warmup_iters << "\n";
  os << "momentum = " << cfg.train.momentum << "\n";
  os << "loss = " << cfg.train.loss << "\n";
  os << "schedule = " << cfg.train.schedule << "\n";
  os << "sampler = " << cfg.train.stage2_sampler << "\n";
  os << "seed = " << cfg.train.seed << "\n";
  os << "\n[cloud]\n";
  os << "mu = " << cfg.train.cloud.mu << "\n";
  os << "sigma = " << cfg.train.cloud.sigma << "\n";
  os << "clamp_lo = " << cfg.train.cloud.clamp_lo << "\n";
  os << "clamp_hi = " << cfg.train.cloud.clamp_hi << "\n";
  os << "angular_scale = " << cfg.train.cloud.angular_scale << "\n";
  os << "scale = " << cfg.train.cloud.scale << "\n";
  os << "per_class_draw = " << (cfg.train.cloud.per_class_draw ? "true" : "false") << "\n";
  os << "\n[eval]\n";
  os << "head_min = " << cfg.thresholds.head_min << "\n";
  os << "mid_min = " << cfg.thresholds.mid_min << "\n";
  os << "quantile_groups = " << (cfg.thresholds.force_quantiles ? "true" : "false") << "\n";
  os << "\n[output]\n";
  os << "dir = " << cfg.out_dir << "\n";
  return os.str();
}

}  // namespace gcl
