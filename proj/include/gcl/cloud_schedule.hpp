#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gcl/class_profile.hpp"
#include "gcl/errors.hpp"

namespace gcl {

/// How per-class cloud sizes are derived from class counts. Rarer classes
/// always get sizes at least as large as more frequent ones.
enum class ScheduleKind { logarithmic, power, cosine };

struct CloudSchedule {
  ScheduleKind kind = ScheduleKind::logarithmic;
  double power_exponent = 1.0 / 3.0;  // used by ScheduleKind::power only
  std::vector<double> raw;
  std::vector<double> normalized;
};

/// Raw per-class cloud sizes:
///   logarithmic  log(n_max) - log(n_j), computed as log(n_max / n_j) so the
///                largest class gets exactly 0 and integer count ratios stay
///                exact (natural log; the base cancels after normalization)
///   power        n_max * n_j^(-k)
///   cosine       cos((n_j / n_max) * pi/2)
inline std::vector<double> raw_cloud_sizes(const ClassProfile& profile, ScheduleKind kind,
                                           double power_exponent = 1.0 / 3.0) {
  profile.validate();
  if (kind == ScheduleKind::power && !(power_exponent > 0.0 && power_exponent <= 1.0))
    throw InvalidArgument("raw_cloud_sizes: power exponent must lie in (0, 1]");

  const double n_max = static_cast<double>(profile.n_max());
  std::vector<double> out(profile.num_classes());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double n_j = static_cast<double>(profile.counts[j]);
    switch (kind) {
      case ScheduleKind::logarithmic:
        out[j] = std::log(n_max / n_j);
        break;
      case ScheduleKind::power:
        out[j] = n_max * std::pow(n_j, -power_exponent);
        break;
      case ScheduleKind::cosine:
        out[j] = std::cos((n_j / n_max) * (std::numbers::pi / 2.0));
        break;
    }
  }
  return out;
}

/// Elementwise division by the maximum, mapping sizes into [0, 1] with
/// max = 1. The all-zero vector (balanced profile, logarithmic kind) stays
/// all-zero; a constant positive vector becomes all-ones.
inline std::vector<double> normalized_cloud_sizes(const std::vector<double>& raw) {
  for (double v : raw)
    if (v < 0.0) throw InvalidArgument("normalized_cloud_sizes: negative raw size");
  if (raw.empty()) return {};
  const double mx = *std::max_element(raw.begin(), raw.end());
  std::vector<double> out(raw.size(), 0.0);
  if (mx > 0.0)
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / mx;
  return out;
}

/// Kind strings: "log" | "pow:<k>" (e.g. "pow:1/3", "pow:0.25") | "cos".
inline CloudSchedule make_cloud_schedule(const ClassProfile& profile, const std::string& kind) {
  CloudSchedule sched;
  if (kind == "log") {
    sched.kind = ScheduleKind::logarithmic;
  } else if (kind == "cos") {
    sched.kind = ScheduleKind::cosine;
  } else if (kind.rfind("pow:", 0) == 0) {
    sched.kind = ScheduleKind::power;
    const std::string arg = kind.substr(4);
    double k = 0.0;
    const auto slash = arg.find('/');
    try {
      if (slash != std::string::npos) {
        const double num = std::stod(arg.substr(0, slash));
        const double den = std::stod(arg.substr(slash + 1));
        if (den == 0.0) throw ConfigError("schedule: zero denominator");
        k = num / den;
      } else {
        k = std::stod(arg);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("schedule: cannot parse power exponent '" + arg + "'");
    }
    if (!(k > 0.0 && k <= 1.0))
      throw ConfigError("schedule: power exponent must lie in (0, 1], got " + arg);
    sched.power_exponent = k;
  } else {
    throw ConfigError("schedule: unknown kind '" + kind + "' (expected log, pow:<k>, cos)");
  }
  sched.raw = raw_cloud_sizes(profile, sched.kind, sched.power_exponent);
  sched.normalized = normalized_cloud_sizes(sched.raw);
  return sched;
}

}  // namespace gcl
