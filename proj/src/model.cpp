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

#include "availscope/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include "availscope/error.hpp"

namespace availscope {

std::string to_string(const ServiceNode& node) {
  return node.ip + ":" + node.service;
}

std::optional<ServiceNode> parse_service_node(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    return std::nullopt;
  }
  return ServiceNode{text.substr(0, colon), text.substr(colon + 1)};
}

std::vector<double> MetricSeries::values() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.value);
  return out;
}

std::vector<std::vector<double>> MetricMatrix::complete_columns() const {
  std::vector<std::vector<double>> cols(columns.size());
  for (const auto& row : rows) {
    const bool complete = std::all_of(row.begin(), row.end(),
                                      [](const auto& c) { return c.has_value(); });
    if (!complete) continue;
    for (std::size_t c = 0; c < row.size(); ++c) cols[c].push_back(*row[c]);
  }
  return cols;
}

std::size_t MetricMatrix::num_complete_rows() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& row) {
    return std::all_of(row.begin(), row.end(), [](const auto& c) { return c.has_value(); });
  }));
}

namespace {

TimestampMs floor_div(TimestampMs a, TimestampMs b) {
  TimestampMs q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

MetricMatrix align(std::span<const MetricSeries> series_set,
                   TimestampMs interval_ms, Aggregation aggregation) {
  if (interval_ms <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "interval_ms must be positive");
  }
  TimestampMs min_ts = std::numeric_limits<TimestampMs>::max();
  TimestampMs max_ts = std::numeric_limits<TimestampMs>::min();
  for (const auto& s : series_set) {
    for (const auto& p : s.points) {
      min_ts = std::min(min_ts, p.ts_ms);
      max_ts = std::max(max_ts, p.ts_ms);
    }
  }
  if (series_set.empty() || min_ts > max_ts) {
    throw Error(ErrorCode::kEmptyInput, "align: no samples to align");
  }

  MetricMatrix out;
  out.interval_ms = interval_ms;
  out.start_ms = floor_div(min_ts, interval_ms) * interval_ms;
  const auto num_rows =
      static_cast<std::size_t>((max_ts - out.start_ms) / interval_ms) + 1;
  out.rows.assign(num_rows, std::vector<std::optional<double>>(series_set.size()));

  std::vector<double> sums(num_rows);
  std::vector<std::size_t> counts(num_rows);
  for (std::size_t c = 0; c < series_set.size(); ++c) {
    const auto& s = series_set[c];
    out.columns.push_back(s.key);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& p : s.points) {
      const auto bucket = static_cast<std::size_t>((p.ts_ms - out.start_ms) / interval_ms);
      if (aggregation == Aggregation::kLast) {
        // points are ordered, so the final write wins
        sums[bucket] = p.value;
        counts[bucket] = 1;
      } else {
        sums[bucket] += p.value;
        ++counts[bucket];
      }
    }
    for (std::size_t t = 0; t < num_rows; ++t) {
      if (counts[t] > 0) out.rows[t][c] = sums[t] / static_cast<double>(counts[t]);
    }
  }
  return out;
}

std::vector<MetricSeries> window(const MetricSeries& series, std::size_t length,
                                 std::size_t stride) {
  if (length == 0 || stride == 0) {
    throw Error(ErrorCode::kInvalidArgument, "window length and stride must be >= 1");
  }
  std::vector<MetricSeries> out;
  const auto n = series.points.size();
  for (std::size_t begin = 0; begin + length <= n; begin += stride) {
    MetricSeries w{series.key, {}};
    w.points.assign(series.points.begin() + static_cast<std::ptrdiff_t>(begin),
                    series.points.begin() + static_cast<std::ptrdiff_t>(begin + length));
    out.push_back(std::move(w));
  }
  return out;
}

std::optional<std::size_t> ServiceDependencyGraph::index_of(const ServiceNode& node) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] == node) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> ServiceDependencyGraph::callees(std::size_t node) const {
  std::vector<std::size_t> out;
  for (const auto& [from, to] : edges) {
    if (from == node && to < nodes.size()) out.push_back(to);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TopologyViolation> validate_topology(const ServiceDependencyGraph& graph) {
  std::vector<TopologyViolation> report;
  std::map<ServiceNode, std::size_t> seen;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto [it, inserted] = seen.emplace(graph.nodes[i], i);
    if (!inserted) {
      report.push_back({TopologyViolation::Kind::kDuplicateNode,
                        "node " + std::to_string(i) + " duplicates node " +
                            std::to_string(it->second) + " (" + to_string(graph.nodes[i]) + ")"});
    }
  }
  for (const auto& [from, to] : graph.edges) {
    const std::string edge = "(" + std::to_string(from) + "," + std::to_string(to) + ")";
    if (from >= graph.nodes.size() || to >= graph.nodes.size()) {
      report.push_back({TopologyViolation::Kind::kDanglingEdge, "dangling edge " + edge});
    } else if (from == to) {
      report.push_back({TopologyViolation::Kind::kSelfLoop, "self-loop " + edge});
    }
  }
  return report;
}

std::optional<int> MetricDependencyGraph::index_of(const std::string& metric) const {
  for (int i = 0; i < size(); ++i) {
    if (metrics[static_cast<std::size_t>(i)] == metric) return i;
  }
  return std::nullopt;
}

bool MetricDependencyGraph::has_directed(int from, int to) const {
  return directed.count({from, to}) > 0;
}

bool MetricDependencyGraph::has_undirected(int a, int b) const {
  return undirected.count({std::min(a, b), std::max(a, b)}) > 0;
}

bool MetricDependencyGraph::adjacent(int a, int b) const {
  return has_undirected(a, b) || has_directed(a, b) || has_directed(b, a);
}

void MetricDependencyGraph::add_undirected(int a, int b) {
  directed.erase({a, b});
  directed.erase({b, a});
  undirected.insert({std::min(a, b), std::max(a, b)});
}

void MetricDependencyGraph::orient(int from, int to) {
  undirected.erase({std::min(from, to), std::max(from, to)});
  directed.erase({to, from});
  directed.insert({from, to});
}

std::vector<int> MetricDependencyGraph::possible_parents(int node) const {
  std::vector<int> out;
  for (const auto& [a, b] : directed) {
    if (b == node) out.push_back(a);
  }
  for (const auto& [a, b] : undirected) {
    if (a == node) out.push_back(b);
    if (b == node) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool directed_part_acyclic(const MetricDependencyGraph& graph) {
  const int n = graph.size();
  std::vector<int> indegree(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  for (const auto& [a, b] : graph.directed) {
    if (a < 0 || b < 0 || a >= n || b >= n) return false;
    children[static_cast<std::size_t>(a)].push_back(b);
    ++indegree[static_cast<std::size_t>(b)];
  }
  std::queue<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indegree[static_cast<std::size_t>(i)] == 0) ready.push(i);
  }
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop();
    ++visited;
    for (int c : children[static_cast<std::size_t>(v)]) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }
  }
  return visited == n;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void to_json(nlohmann::json& j, const ServiceNode& node) {
  j = nlohmann::json{{"ip", node.ip}, {"service", node.service}};
}

void from_json(const nlohmann::json& j, ServiceNode& node) {
  node.ip = j.at("ip").get<std::string>();
  node.service = j.at("service").get<std::string>();
}

void to_json(nlohmann::json& j, const ServiceDependencyGraph& graph) {
  j = nlohmann::json::object();
  j["nodes"] = graph.nodes;
  auto edges = nlohmann::json::array();
  for (const auto& [from, to] : graph.edges) edges.push_back({from, to});
  j["edges"] = std::move(edges);
}

void from_json(const nlohmann::json& j, ServiceDependencyGraph& graph) {
  graph.nodes = j.at("nodes").get<std::vector<ServiceNode>>();
  graph.edges.clear();
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) {
        throw Error(ErrorCode::kInvalidArgument, "topology edge must be a [from, to] pair");
      }
      graph.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
  }
}

void to_json(nlohmann::json& j, const MetricDependencyGraph& graph) {
  j = nlohmann::json::object();
  j["metrics"] = graph.metrics;
  auto directed = nlohmann::json::array();
  for (const auto& [a, b] : graph.directed) directed.push_back({a, b});
  auto undirected = nlohmann::json::array();
  for (const auto& [a, b] : graph.undirected) undirected.push_back({a, b});
  j["directed"] = std::move(directed);
  j["undirected"] = std::move(undirected);
}

void from_json(const nlohmann::json& j, MetricDependencyGraph& graph) {
  graph = MetricDependencyGraph{};
  graph.metrics = j.at("metrics").get<std::vector<std::string>>();
  const int n = graph.size();
  auto read_pair = [n](const nlohmann::json& e) {
    const int a = e.at(0).get<int>();
    const int b = e.at(1).get<int>();
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
      throw Error(ErrorCode::kInvalidArgument, "metric graph edge out of range");
    }
    return std::pair{a, b};
  };
  for (const auto& e : j.value("directed", nlohmann::json::array())) {
    const auto [a, b] = read_pair(e);
    graph.directed.insert({a, b});
  }
  for (const auto& e : j.value("undirected", nlohmann::json::array())) {
    const auto [a, b] = read_pair(e);
    graph.undirected.insert({std::min(a, b), std::max(a, b)});
  }
}

ServiceDependencyGraph load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileUnreadable, "cannot read topology file " + path);
  try {
    return nlohmann::json::parse(in).get<ServiceDependencyGraph>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "bad topology file " + path + ": " + e.what());
  }
}

void save_topology_file(const ServiceDependencyGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kFileUnreadable, "cannot write topology file " + path);
  out << nlohmann::json(graph).dump() << "\n";
}

}  // namespace availscope
