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

// Seeded multi-tier workload and fault-injection simulator.
//
// Each service is a linear-Gaussian structural model over its metrics,
//
//   x_j(t) = b_j + sum_k w_jk x_k(t) + u_j(t) + e_j(t),
//
// evaluated in topological order. e_j is AR(1) noise with stationary
// standard deviation noise_j and coefficient ar_j (ar = 0 gives white
// noise). u_j is non-zero only for a caller's interface metric:
// coupling_weight times the sum of its callees' interface metrics at t-1.
//
// Fault magnitudes are in units of the metric's stationary no-fault
// standard deviation (sigma below). A service is down while any of its
// metrics is more than 6 sigma from its no-fault stationary mean.

#ifndef AVAILSCOPE_FAULTSIM_HPP_
#define AVAILSCOPE_FAULTSIM_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "availscope/availability.hpp"
#include "availscope/model.hpp"

namespace availscope {

enum class FaultKind { kCpuHog, kMemLeak, kIoSaturation, kConfigError, kDependencySlowdown };
std::string_view to_string(FaultKind kind);
std::optional<FaultKind> parse_fault_kind(std::string_view text);

struct FaultEvent {
  std::int64_t start_tick = 0;
  std::int64_t end_tick = 0;  // exclusive
  ServiceNode target;
  std::string metric;
  FaultKind kind = FaultKind::kCpuHog;
  double magnitude = 1.0;
};

struct MetricModel {
  std::string name;
  double intercept = 0.0;
  double noise = 1.0;
  double ar = 0.0;
};

struct MetricEdgeSpec {
  std::string from;
  std::string to;
  double weight = 0.0;
};

struct ServiceModel {
  ServiceNode node;
  std::vector<MetricModel> metrics;
  std::vector<MetricEdgeSpec> edges;
  std::string interface_metric;
  double coupling_weight = 0.5;
};

struct SimSpec {
  ServiceDependencyGraph topology;
  std::vector<ServiceModel> services;  // parallel to topology.nodes
  TimestampMs tick_ms = 1000;
  TimestampMs start_ms = 1700000000000;
  std::int64_t duration_ticks = 1000;
  std::vector<FaultEvent> faults;
  std::uint64_t seed = 0;
};

// Empty when valid.
std::vector<std::string> validate_spec(const SimSpec& spec);

struct FaultLabel {
  std::int64_t tick_start = 0;
  std::int64_t tick_end = 0;
  ServiceNode target;
  std::string metric;
  FaultKind kind = FaultKind::kCpuHog;

  bool operator==(const FaultLabel&) const = default;
};

struct SimOutput {
  std::vector<MetricSample> samples;  // tick-major, then topology order, then metric order
  std::vector<FaultLabel> labels;
  std::vector<UpDownEvent> events;
  ServiceDependencyGraph topology;
  std::map<ServiceNode, MetricDependencyGraph> truth_graphs;
};

// No-fault stationary moments of every metric, keyed like the samples.
struct StationaryMoments {
  std::map<MetricKey, double> mean;
  std::map<MetricKey, double> stddev;
};

// Throws kInvalidSpec listing every violation.
StationaryMoments stationary_moments(const SimSpec& spec);
SimOutput simulate(const SimSpec& spec);

// Writes metrics.ndjson, labels.ndjson, events.ndjson, topology.json and
// truth_graphs.json into dir (created if needed).
void write_sim_output(const SimOutput& out, const std::string& dir);

// Three tiers, web 10.0.0.1/apache -> app 10.0.0.2/tomcat -> db
// 10.0.0.3/mysql, each with request_rate, cpu_util, mem_used, io_wait,
// latency_ms and conn_errors; latency_ms is the interface metric.
SimSpec three_tier_spec(std::uint64_t seed, double ar = 0.5, std::int64_t duration_ticks = 1000);

// Random tree of services rooted at svc0; per-service random metric DAG.
// Throws kDegenerateSpec when metrics_per_service < 2.
SimSpec generate_random_spec(int n_services, int metrics_per_service, double expected_degree,
                             std::uint64_t seed);

std::string serialize_label_line(const FaultLabel& label);

void to_json(nlohmann::json& j, const FaultEvent& f);
void from_json(const nlohmann::json& j, FaultEvent& f);
void to_json(nlohmann::json& j, const SimSpec& spec);
void from_json(const nlohmann::json& j, SimSpec& spec);
SimSpec load_sim_spec(const std::string& path);

}  // namespace availscope

#endif  // AVAILSCOPE_FAULTSIM_HPP_
