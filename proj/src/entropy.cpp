// Copyright 2026 The Availscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "availscope/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "availscope/error.hpp"

namespace availscope {

void EntropyConfig::validate() const {
  if (m < 1) throw Error(ErrorCode::kInvalidConfig, "entropy m must be >= 1");
  if (!(r_fraction > 0.0)) throw Error(ErrorCode::kInvalidConfig, "r_fraction must be > 0");
  if (max_scale < 1) throw Error(ErrorCode::kInvalidConfig, "max_scale must be >= 1");
  if (!(alarm_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "alarm_threshold must be > 0");
  }
  if (window_len / static_cast<std::size_t>(max_scale) < static_cast<std::size_t>(m + 2)) {
    throw Error(ErrorCode::kInvalidConfig, "window_len / max_scale must be >= m + 2");
  }
}

std::vector<double> coarse_grain(std::span<const double> x, int tau) {
  if (tau < 1) throw Error(ErrorCode::kInvalidArgument, "scale must be >= 1");
  const auto t = static_cast<std::size_t>(tau);
  if (x.size() < t) throw Error(ErrorCode::kSeriesTooShort, "series shorter than scale");
  if (tau == 1) return {x.begin(), x.end()};

  std::vector<double> out(x.size() / t);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double sum = 0.0;
    for (std::size_t i = j * t; i < (j + 1) * t; ++i) sum += x[i];
    out[j] = sum / static_cast<double>(tau);
  }
  return out;
}

MatchCounts count_template_matches(std::span<const double> x, int m, double r) {
  const auto mm = static_cast<std::size_t>(m);
  const std::size_t templates = x.size() - mm;

  std::vector<std::size_t> order(templates);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : a < b;
  });

  MatchCounts counts;
  for (std::size_t p = 0; p < templates; ++p) {
    const std::size_t i = order[p];
    for (std::size_t q = p + 1; q < templates; ++q) {
      const std::size_t j = order[q];
      if (x[j] - x[i] > r) break;
      bool match = true;
      for (std::size_t k = 1; k < mm; ++k) {
        if (std::fabs(x[i + k] - x[j + k]) > r) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      counts.b += 2;
      if (std::fabs(x[i + mm] - x[j + mm]) <= r) counts.a += 2;
    }
  }
  return counts;
}

EntropyValue sample_entropy(std::span<const double> x, int m, double r) {
  if (m < 1) throw Error(ErrorCode::kInvalidArgument, "embedding length m must be >= 1");
  if (x.size() < static_cast<std::size_t>(m) + 2) {
    throw Error(ErrorCode::kSeriesTooShort, "sample entropy needs at least m + 2 points");
  }
  if (!(r > 0.0)) throw Error(ErrorCode::kNonPositiveTolerance, "tolerance r must be > 0");

  const auto counts = count_template_matches(x, m, r);
  if (counts.b == 0) return EntropyValue::undefined();
  if (counts.a == 0) {
    return {std::log(static_cast<double>(counts.b) + 1.0), EntropyValue::Status::kCapped};
  }
  return {-std::log(static_cast<double>(counts.a) / static_cast<double>(counts.b)),
          EntropyValue::Status::kDefined};
}

std::vector<EntropyValue> mse_curve(std::span<const double> x, const EntropyConfig& cfg) {
  if (cfg.m < 1 || cfg.max_scale < 1 || !(cfg.r_fraction > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid entropy configuration");
  }
  const auto needed = static_cast<std::size_t>(cfg.max_scale) * static_cast<std::size_t>(cfg.m + 2);
  if (x.size() < needed) {
    throw Error(ErrorCode::kSeriesTooShort,
                "MSE needs at least max_scale * (m + 2) = " + std::to_string(needed) + " points");
  }
  double r = cfg.r_fraction * stddev(x);
  // A constant window has zero spread; any positive tolerance matches every
  // template, which gives the expected zero entropy.
  if (!(r > 0.0)) r = std::numeric_limits<double>::min();

  std::vector<EntropyValue> curve;
  curve.reserve(static_cast<std::size_t>(cfg.max_scale));
  for (int tau = 1; tau <= cfg.max_scale; ++tau) {
    const auto y = coarse_grain(x, tau);
    curve.push_back(sample_entropy(y, cfg.m, r));
  }
  return curve;
}

HealthReport health_score(const std::map<std::string, std::vector<double>>& windows,
                          const EntropyConfig& cfg, const ServiceNode& target,
                          TimestampMs now_ms) {
  HealthReport report;
  report.target = target;
  report.computed_at_ms = now_ms;

  const std::size_t min_defined = static_cast<std::size_t>((cfg.max_scale + 1) / 2);
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& [metric, xs] : windows) {
    std::vector<EntropyValue> curve;
    try {
      curve = mse_curve(xs, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSeriesTooShort) throw;
      report.excluded.push_back(metric);
      continue;
    }
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& v : curve) {
      if (!v.defined()) continue;
      sum += v.value;
      ++defined;
    }
    report.per_metric_entropy[metric] = std::move(curve);
    if (defined < min_defined) {
      report.excluded.push_back(metric);
      continue;
    }
    const double metric_score = sum / static_cast<double>(defined);
    report.per_metric_score[metric] = metric_score;
    total += metric_score;
    ++used;
  }
  if (used == 0) {
    throw Error(ErrorCode::kNoUsableMetric,
                "no metric of " + to_string(target) + " has a usable entropy curve");
  }
  report.score = total / static_cast<double>(used);
  report.alarm = health_alarm(report, cfg.alarm_threshold);
  return report;
}

bool health_alarm(const HealthReport& report, double theta) { return report.score > theta; }

void to_json(nlohmann::json& j, const EntropyValue& v) {
  j = v.defined() ? nlohmann::json(v.value) : nlohmann::json(nullptr);
}

nlohmann::json curve_to_json(const std::vector<EntropyValue>& curve) {
  auto values = nlohmann::json::array();
  auto capped = nlohmann::json::array();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    values.push_back(curve[i]);
    if (curve[i].capped()) capped.push_back(i + 1);
  }
  return {{"curve", std::move(values)}, {"capped_scales", std::move(capped)}};
}

void to_json(nlohmann::json& j, const HealthReport& report) {
  j = nlohmann::json::object();
  j["target"] = report.target;
  j["score"] = report.score;
  j["alarm"] = report.alarm;
  j["computed_at_ms"] = report.computed_at_ms;
  auto metrics = nlohmann::json::object();
  for (const auto& [metric, curve] : report.per_metric_entropy) {
    auto entry = curve_to_json(curve);
    const auto it = report.per_metric_score.find(metric);
    entry["score"] = it == report.per_metric_score.end() ? nlohmann::json(nullptr)
                                                          : nlohmann::json(it->second);
    metrics[metric] = std::move(entry);
  }
  j["metrics"] = std::move(metrics);
  j["excluded"] = report.excluded;
}

void to_json(nlohmann::json& j, const EntropyConfig& cfg) {
  j = {{"m", cfg.m},
       {"r_fraction", cfg.r_fraction},
       {"max_scale", cfg.max_scale},
       {"window_len", cfg.window_len},
       {"alarm_threshold", cfg.alarm_threshold}};
}

void from_json(const nlohmann::json& j, EntropyConfig& cfg) {
  cfg.m = j.value("m", cfg.m);
  cfg.r_fraction = j.value("r_fraction", cfg.r_fraction);
  cfg.max_scale = j.value("max_scale", cfg.max_scale);
  cfg.window_len = j.value("window_len", cfg.window_len);
  cfg.alarm_threshold = j.value("alarm_threshold", cfg.alarm_threshold);
}

}  // namespace availscope
