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

// Multi-scale sample entropy and the entropy-based health score.
//
// Higher entropy means a more irregular signal and a higher failure risk.
// A service's score is the mean over its metrics of the mean of each
// metric's MSE curve; the alarm fires when the score is strictly above the
// configured threshold.

#ifndef AVAILSCOPE_ENTROPY_HPP_
#define AVAILSCOPE_ENTROPY_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "availscope/model.hpp"

namespace availscope {

struct EntropyConfig {
  int m = 2;
  double r_fraction = 0.15;
  int max_scale = 10;
  std::size_t window_len = 600;
  double alarm_threshold = 1.0;

  // Throws Error(kInvalidConfig).
  void validate() const;
};

struct EntropyValue {
  enum class Status { kDefined, kCapped, kUndefined };

  double value = 0.0;
  Status status = Status::kUndefined;

  bool defined() const { return status != Status::kUndefined; }
  bool capped() const { return status == Status::kCapped; }

  static EntropyValue undefined() { return {}; }

  bool operator==(const EntropyValue&) const = default;
};

// Block means of tau consecutive points; the trailing partial block is
// discarded. Throws kSeriesTooShort when x.size() < tau.
std::vector<double> coarse_grain(std::span<const double> x, int tau);

// Template-match counts behind a SampEn value. Pairs are ordered (i != j).
struct MatchCounts {
  std::uint64_t b = 0;  // length-m matches
  std::uint64_t a = 0;  // length-(m+1) matches
};

// Uses the N-m templates starting at 0..N-m-1 for both lengths, Chebyshev
// distance <= r. Sorted sweep on the first template coordinate.
MatchCounts count_template_matches(std::span<const double> x, int m, double r);

// -ln(A/B). B == 0 yields undefined; A == 0 < B yields the capped surrogate
// ln(B + 1). Throws kSeriesTooShort (N < m + 2) or kNonPositiveTolerance.
EntropyValue sample_entropy(std::span<const double> x, int m, double r);

// Entry tau-1 is SampEn of the scale-tau coarse-grained series, all scales
// sharing r = r_fraction * stddev(x).
std::vector<EntropyValue> mse_curve(std::span<const double> x, const EntropyConfig& cfg);

struct HealthReport {
  ServiceNode target;
  std::map<std::string, std::vector<EntropyValue>> per_metric_entropy;
  std::map<std::string, double> per_metric_score;
  std::vector<std::string> excluded;  // metrics not counted in score
  double score = 0.0;
  bool alarm = false;
  TimestampMs computed_at_ms = 0;
};

// Throws kNoUsableMetric when every metric is excluded.
HealthReport health_score(const std::map<std::string, std::vector<double>>& windows,
                          const EntropyConfig& cfg, const ServiceNode& target = {},
                          TimestampMs now_ms = 0);

bool health_alarm(const HealthReport& report, double theta);

void to_json(nlohmann::json& j, const EntropyValue& v);
nlohmann::json curve_to_json(const std::vector<EntropyValue>& curve);
void to_json(nlohmann::json& j, const HealthReport& report);
void to_json(nlohmann::json& j, const EntropyConfig& cfg);
void from_json(const nlohmann::json& j, EntropyConfig& cfg);

}  // namespace availscope

#endif  // AVAILSCOPE_ENTROPY_HPP_
