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

// Core data model shared by every analysis module: metric samples and
// series, the aligned metric matrix fed to correlation and causal
// discovery, the service-level topology and the metric-level dependency
// graph.

#ifndef AVAILSCOPE_MODEL_HPP_
#define AVAILSCOPE_MODEL_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace availscope {

using TimestampMs = std::int64_t;

struct ServiceNode {
  std::string ip;
  std::string service;

  auto operator<=>(const ServiceNode&) const = default;
  bool operator==(const ServiceNode&) const = default;
};

// "ip:service", the form used on the command line.
std::string to_string(const ServiceNode& node);
std::optional<ServiceNode> parse_service_node(const std::string& text);

struct MetricKey {
  std::string ip;
  std::string service;
  std::string metric;

  ServiceNode node() const { return {ip, service}; }

  auto operator<=>(const MetricKey&) const = default;
  bool operator==(const MetricKey&) const = default;
};

struct MetricSample {
  TimestampMs ts_ms = 0;
  std::string ip;
  std::string service;
  std::string metric;
  double value = 0.0;

  MetricKey key() const { return {ip, service, metric}; }

  bool operator==(const MetricSample&) const = default;
};

struct SeriesPoint {
  TimestampMs ts_ms = 0;
  double value = 0.0;

  bool operator==(const SeriesPoint&) const = default;
};

struct MetricSeries {
  MetricKey key;
  std::vector<SeriesPoint> points;  // strictly increasing ts_ms

  std::vector<double> values() const;
  bool operator==(const MetricSeries&) const = default;
};

enum class Aggregation { kMean, kLast };

// Aligned, bucketed view of several series. Row t covers
// [start_ms + t*interval_ms, start_ms + (t+1)*interval_ms).
struct MetricMatrix {
  TimestampMs interval_ms = 1;
  TimestampMs start_ms = 0;
  std::vector<MetricKey> columns;
  std::vector<std::vector<std::optional<double>>> rows;

  std::size_t num_columns() const { return columns.size(); }
  std::size_t num_rows() const { return rows.size(); }

  // Column-major values of the rows with no absent cell (listwise deletion).
  std::vector<std::vector<double>> complete_columns() const;
  std::size_t num_complete_rows() const;
};

MetricMatrix align(std::span<const MetricSeries> series_set,
                   TimestampMs interval_ms,
                   Aggregation aggregation = Aggregation::kMean);

// Contiguous point slices [k*stride, k*stride + length); full windows only.
std::vector<MetricSeries> window(const MetricSeries& series,
                                 std::size_t length, std::size_t stride);

struct ServiceDependencyGraph {
  std::vector<ServiceNode> nodes;
  // caller -> callee
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::optional<std::size_t> index_of(const ServiceNode& node) const;
  std::vector<std::size_t> callees(std::size_t node) const;
};

struct TopologyViolation {
  enum class Kind { kDuplicateNode, kDanglingEdge, kSelfLoop };
  Kind kind;
  std::string detail;
};

std::vector<TopologyViolation> validate_topology(
    const ServiceDependencyGraph& graph);

// Partially directed graph over metric names. Undirected pairs are stored
// with first < second.
struct MetricDependencyGraph {
  using Edge = std::pair<int, int>;

  std::vector<std::string> metrics;
  std::set<Edge> directed;
  std::set<Edge> undirected;

  int size() const { return static_cast<int>(metrics.size()); }
  std::optional<int> index_of(const std::string& metric) const;

  bool has_directed(int from, int to) const;
  bool has_undirected(int a, int b) const;
  bool adjacent(int a, int b) const;

  void add_undirected(int a, int b);
  // Replaces any existing edge between the endpoints.
  void orient(int from, int to);

  // Directed parents plus undirected neighbours.
  std::vector<int> possible_parents(int node) const;

  bool operator==(const MetricDependencyGraph&) const = default;
};

// True when the directed part admits a topological order.
bool directed_part_acyclic(const MetricDependencyGraph& graph);

double mean(std::span<const double> xs);
// Population standard deviation (divides by N).
double stddev(std::span<const double> xs);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

void to_json(nlohmann::json& j, const ServiceNode& node);
void from_json(const nlohmann::json& j, ServiceNode& node);
void to_json(nlohmann::json& j, const ServiceDependencyGraph& graph);
void from_json(const nlohmann::json& j, ServiceDependencyGraph& graph);
void to_json(nlohmann::json& j, const MetricDependencyGraph& graph);
void from_json(const nlohmann::json& j, MetricDependencyGraph& graph);

ServiceDependencyGraph load_topology_file(const std::string& path);
void save_topology_file(const ServiceDependencyGraph& graph,
                        const std::string& path);

}  // namespace availscope

#endif  // AVAILSCOPE_MODEL_HPP_
