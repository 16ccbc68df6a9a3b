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

// Anomaly scoring and two-level root-cause localization.
//
// Level 1 walks the service topology from the entry point along
// caller -> callee edges and keeps the deepest anomalous services. Level 2
// ranks, inside each of those services, the anomalous metrics that have no
// anomalous parent in the learned metric CPDAG.

#ifndef AVAILSCOPE_ROOTCAUSE_HPP_
#define AVAILSCOPE_ROOTCAUSE_HPP_

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "availscope/entropy.hpp"
#include "availscope/model.hpp"

namespace availscope {

struct AnomalyConfig {
  double z_threshold = 3.0;
  double cusum_k = 0.5;
  double cusum_h = 5.0;
  std::size_t baseline_len = 60;
  // Trailing samples scored against the baseline by the diagnosis pipeline.
  std::size_t detect_len = 30;

  void validate() const;
};

inline constexpr double kInfiniteScore = std::numeric_limits<double>::infinity();

// max |x - mu| / sigma over the window, sigma the population deviation of
// the baseline. A zero-variance baseline scores 0 when the window sits on the
// baseline mean and +inf otherwise. Throws kEmptyWindow, kEmptyInput.
double zscore_anomaly(std::span<const double> baseline, std::span<const double> window);

// Two-sided tabular CUSUM. Each side resets after it alarms. Returns the
// ascending indices where either side alarmed.
std::vector<std::size_t> cusum_change(std::span<const double> series, double mu0, double sigma,
                                      const AnomalyConfig& cfg);

struct ServiceObservation {
  std::optional<HealthReport> health;
  std::map<std::string, double> metric_z;  // metric -> z-score
};

struct ServiceAnomalyResult {
  std::set<ServiceNode> anomalous;
  std::vector<ServiceNode> missing;  // topology nodes without a snapshot entry
};

// A service is anomalous iff its entropy alarm fired (score > theta) or
// any metric z-score exceeds cfg.z_threshold.
ServiceAnomalyResult service_anomaly(const ServiceDependencyGraph& topology,
                                     const std::map<ServiceNode, ServiceObservation>& snapshot,
                                     const AnomalyConfig& cfg, double theta);

struct RankedCause {
  ServiceNode node;
  std::string metric;
  double score = 0.0;

  bool operator==(const RankedCause&) const = default;
};

struct Diagnosis {
  ServiceNode entry;
  std::set<ServiceNode> anomalous_services;
  std::vector<ServiceNode> candidate_services;
  std::vector<RankedCause> ranked_causes;
  std::vector<std::string> evidence;  // parallel to ranked_causes
  TimestampMs produced_at_ms = 0;
};

using MetricScores = std::map<ServiceNode, std::map<std::string, double>>;

// Throws kEntryNotInTopology.
Diagnosis localize(const ServiceDependencyGraph& topology, const ServiceNode& entry,
                   const std::set<ServiceNode>& anomalous,
                   const std::map<ServiceNode, MetricDependencyGraph>& metric_graphs,
                   const MetricScores& scores, const AnomalyConfig& cfg,
                   TimestampMs now_ms = 0);

// Level-1 helper, exposed for tests: deepest anomalous services reachable
// from the entry.
std::vector<std::size_t> candidate_services(const ServiceDependencyGraph& topology,
                                            std::size_t entry,
                                            const std::vector<bool>& anomalous);

// Level-2 helper: root metrics inside one service.
std::vector<std::string> candidate_metrics(const MetricDependencyGraph* graph,
                                           const std::map<std::string, double>& z,
                                           double z_threshold);

void to_json(nlohmann::json& j, const AnomalyConfig& cfg);
void from_json(const nlohmann::json& j, AnomalyConfig& cfg);
void to_json(nlohmann::json& j, const Diagnosis& d);
void from_json(const nlohmann::json& j, Diagnosis& d);

// Scores are plain numbers; +inf is written as the string "inf".
nlohmann::json score_to_json(double score);
double score_from_json(const nlohmann::json& j);

}  // namespace availscope

#endif  // AVAILSCOPE_ROOTCAUSE_HPP_
