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

#include "availscope/pipeline.hpp"

#include "availscope/error.hpp"

namespace availscope {

std::map<ServiceNode, ServiceState> observe_services(const ServiceDependencyGraph& topology,
                                                     const std::vector<MetricSeries>& series,
                                                     const AppConfig& cfg, TimestampMs now_ms,
                                                     std::vector<std::string>* warnings) {
  auto warn = [&](std::string text) {
    if (warnings) warnings->push_back(std::move(text));
  };
  std::map<ServiceNode, std::vector<MetricSeries>> by_node;
  for (const auto& s : series) {
    if (!s.points.empty()) by_node[s.key.node()].push_back(s);
  }

  std::map<ServiceNode, ServiceState> out;
  for (const auto& node : topology.nodes) {
    const auto it = by_node.find(node);
    if (it == by_node.end()) continue;
    ServiceState state;
    state.matrix = align(it->second, cfg.interval_ms, cfg.aggregation);
    for (std::size_t c = 0; c < state.matrix.num_columns(); ++c) {
      auto& col = state.columns[state.matrix.columns[c].metric];
      col.reserve(state.matrix.num_rows());
      for (const auto& row : state.matrix.rows) {
        if (row[c]) col.push_back(*row[c]);
      }
    }

    const auto bl = cfg.anomaly.baseline_len;
    const auto dl = cfg.anomaly.detect_len;
    for (const auto& [metric, col] : state.columns) {
      if (col.size() < bl + dl) {
        warn(to_string(node) + ":" + metric + " has " + std::to_string(col.size()) +
             " rows, z-score needs " + std::to_string(bl + dl));
        continue;
      }
      const std::span<const double> all(col);
      state.observation.metric_z[metric] = zscore_anomaly(all.first(bl), all.last(dl));
    }

    std::map<std::string, std::vector<double>> windows;
    for (const auto& [metric, col] : state.columns) {
      const auto n = std::min(col.size(), cfg.entropy.window_len);
      windows[metric].assign(col.end() - static_cast<std::ptrdiff_t>(n), col.end());
    }
    try {
      state.observation.health = health_score(windows, cfg.entropy, node, now_ms);
    } catch (const Error& e) {
      warn(to_string(node) + ": no health score: " + e.what());
    }
    out.emplace(node, std::move(state));
  }
  return out;
}

PipelineResult run_diagnosis(const ServiceDependencyGraph& topology,
                             const std::vector<MetricSeries>& series, const ServiceNode& entry,
                             const AppConfig& cfg, TimestampMs now_ms) {
  const auto entry_idx = topology.index_of(entry);
  if (!entry_idx) {
    throw Error(ErrorCode::kEntryNotInTopology, to_string(entry) + " is not in the topology");
  }
  PipelineResult result;
  auto states = observe_services(topology, series, cfg, now_ms, &result.warnings);

  std::map<ServiceNode, ServiceObservation> snapshot;
  for (const auto& [node, state] : states) {
    snapshot.emplace(node, state.observation);
    if (state.observation.health) result.health.emplace(node, *state.observation.health);
    result.scores.emplace(node, state.observation.metric_z);
  }
  const auto anomaly =
      service_anomaly(topology, snapshot, cfg.anomaly, cfg.entropy.alarm_threshold);
  for (const auto& node : anomaly.missing) {
    result.warnings.push_back(to_string(node) + ": no metrics");
  }

  std::vector<bool> flags(topology.nodes.size());
  for (std::size_t i = 0; i < topology.nodes.size(); ++i) {
    flags[i] = anomaly.anomalous.count(topology.nodes[i]) > 0;
  }
  std::map<ServiceNode, MetricDependencyGraph> graphs;
  for (auto idx : candidate_services(topology, *entry_idx, flags)) {
    const auto& node = topology.nodes[idx];
    const auto it = states.find(node);
    if (it == states.end()) continue;
    try {
      auto learned = learn_metric_graph(it->second.matrix, cfg.pc);
      graphs.emplace(node, learned.graph);
      result.graphs.emplace(node, std::move(learned));
    } catch (const Error& e) {
      result.warnings.push_back(to_string(node) + ": no metric graph: " + e.what());
    }
  }
  result.diagnosis =
      localize(topology, entry, anomaly.anomalous, graphs, result.scores, cfg.anomaly, now_ms);
  return result;
}

void to_json(nlohmann::json& j, const PipelineResult& r) {
  j = r.diagnosis;
  auto health = nlohmann::json::object();
  for (const auto& [node, report] : r.health) {
    health[to_string(node)] = {{"score", report.score}, {"alarm", report.alarm}};
  }
  auto graphs = nlohmann::json::object();
  for (const auto& [node, learned] : r.graphs) graphs[to_string(node)] = learned;
  auto scores = nlohmann::json::object();
  for (const auto& [node, z] : r.scores) {
    auto per = nlohmann::json::object();
    for (const auto& [metric, v] : z) per[metric] = score_to_json(v);
    scores[to_string(node)] = std::move(per);
  }
  j["health"] = std::move(health);
  j["metric_graphs"] = std::move(graphs);
  j["metric_z"] = std::move(scores);
  j["warnings"] = r.warnings;
}

}  // namespace availscope
