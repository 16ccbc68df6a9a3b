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

#include "availscope/rootcause.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <tuple>

#include "availscope/error.hpp"

namespace availscope {

void AnomalyConfig::validate() const {
  if (!(z_threshold > 0.0)) throw Error(ErrorCode::kInvalidConfig, "z_threshold must be > 0");
  if (!(cusum_k > 0.0)) throw Error(ErrorCode::kInvalidConfig, "cusum_k must be > 0");
  if (!(cusum_h > 0.0)) throw Error(ErrorCode::kInvalidConfig, "cusum_h must be > 0");
  if (baseline_len < 30) throw Error(ErrorCode::kInvalidConfig, "baseline_len must be >= 30");
  if (detect_len < 1) throw Error(ErrorCode::kInvalidConfig, "detect_len must be >= 1");
}

double zscore_anomaly(std::span<const double> baseline, std::span<const double> window) {
  if (window.empty()) throw Error(ErrorCode::kEmptyWindow, "anomaly window is empty");
  if (baseline.empty()) throw Error(ErrorCode::kEmptyInput, "anomaly baseline is empty");
  const double mu = mean(baseline);
  const double sigma = stddev(baseline);
  if (!(sigma > 0.0)) {
    const bool on_mean = std::all_of(window.begin(), window.end(),
                                     [mu](double x) { return x == mu; });
    return on_mean ? 0.0 : kInfiniteScore;
  }
  double worst = 0.0;
  for (double x : window) worst = std::max(worst, std::fabs(x - mu) / sigma);
  return worst;
}

std::vector<std::size_t> cusum_change(std::span<const double> series, double mu0, double sigma,
                                      const AnomalyConfig& cfg) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "CUSUM sigma must be > 0");
  const double slack = cfg.cusum_k * sigma;
  const double limit = cfg.cusum_h * sigma;
  std::vector<std::size_t> out;
  double upper = 0.0;
  double lower = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    upper = std::max(0.0, upper + (series[t] - mu0 - slack));
    lower = std::max(0.0, lower + (mu0 - series[t] - slack));
    bool alarm = false;
    if (upper > limit) {
      alarm = true;
      upper = 0.0;
    }
    if (lower > limit) {
      alarm = true;
      lower = 0.0;
    }
    if (alarm) out.push_back(t);
  }
  return out;
}

ServiceAnomalyResult service_anomaly(const ServiceDependencyGraph& topology,
                                     const std::map<ServiceNode, ServiceObservation>& snapshot,
                                     const AnomalyConfig& cfg, double theta) {
  ServiceAnomalyResult out;
  for (const auto& node : topology.nodes) {
    const auto it = snapshot.find(node);
    if (it == snapshot.end()) {
      out.missing.push_back(node);
      continue;
    }
    const auto& obs = it->second;
    bool anomalous = obs.health.has_value() && health_alarm(*obs.health, theta);
    for (const auto& [metric, z] : obs.metric_z) {
      if (z > cfg.z_threshold) anomalous = true;
    }
    if (anomalous) out.anomalous.insert(node);
  }
  return out;
}

namespace {

// Tarjan's strongly connected components over an adjacency list.
std::vector<int> scc_ids(const std::vector<std::vector<int>>& adj, int* count) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  int next_index = 0;
  int next_comp = 0;

  std::function<void(int)> connect = [&](int v) {
    const auto vu = static_cast<std::size_t>(v);
    index[vu] = low[vu] = next_index++;
    stack.push_back(v);
    on_stack[vu] = true;
    for (int w : adj[vu]) {
      const auto wu = static_cast<std::size_t>(w);
      if (index[wu] < 0) {
        connect(w);
        low[vu] = std::min(low[vu], low[wu]);
      } else if (on_stack[wu]) {
        low[vu] = std::min(low[vu], index[wu]);
      }
    }
    if (low[vu] == index[vu]) {
      while (true) {
        const int w = stack.back();
        stack.pop_back();
        on_stack[static_cast<std::size_t>(w)] = false;
        comp[static_cast<std::size_t>(w)] = next_comp;
        if (w == v) break;
      }
      ++next_comp;
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[static_cast<std::size_t>(v)] < 0) connect(v);
  }
  *count = next_comp;
  return comp;
}

}  // namespace

std::vector<std::size_t> candidate_services(const ServiceDependencyGraph& topology,
                                            std::size_t entry,
                                            const std::vector<bool>& anomalous) {
  const std::size_t n = topology.nodes.size();
  std::vector<bool> reached(n, false);
  std::vector<std::size_t> stack{entry};
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (reached[v]) continue;
    reached[v] = true;
    for (auto c : topology.callees(v)) {
      if (!reached[c]) stack.push_back(c);
    }
  }

  // Deepest anomalous: anomalous nodes with no anomalous callee. Cycles of
  // anomalous services are handled by taking the sink components.
  std::vector<std::size_t> members;
  std::vector<int> local(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (reached[v] && anomalous[v]) {
      local[v] = static_cast<int>(members.size());
      members.push_back(v);
    }
  }
  std::vector<std::vector<int>> adj(members.size());
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (auto c : topology.callees(members[a])) {
      if (local[c] >= 0 && c != members[a]) adj[a].push_back(local[c]);
    }
  }
  int count = 0;
  const auto comp = scc_ids(adj, &count);
  std::vector<bool> has_exit(static_cast<std::size_t>(count), false);
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (int b : adj[a]) {
      if (comp[a] != comp[static_cast<std::size_t>(b)]) has_exit[static_cast<std::size_t>(comp[a])] = true;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < members.size(); ++a) {
    if (!has_exit[static_cast<std::size_t>(comp[a])]) out.push_back(members[a]);
  }
  return out;
}

std::vector<std::string> candidate_metrics(const MetricDependencyGraph* graph,
                                           const std::map<std::string, double>& z,
                                           double z_threshold) {
  std::vector<std::string> anomalous;
  for (const auto& [metric, score] : z) {
    if (score > z_threshold) anomalous.push_back(metric);
  }
  const auto k = anomalous.size();
  // adj[a] holds every anomalous metric reachable from a, through any
  // metric, so that candidates never descend from one another.
  std::vector<std::vector<int>> adj(k);
  if (graph) {
    const int n = graph->size();
    std::vector<int> anomalous_at(static_cast<std::size_t>(n), -1);
    for (std::size_t a = 0; a < k; ++a) {
      if (auto idx = graph->index_of(anomalous[a])) {
        anomalous_at[static_cast<std::size_t>(*idx)] = static_cast<int>(a);
      }
    }
    for (std::size_t a = 0; a < k; ++a) {
      const auto start = graph->index_of(anomalous[a]);
      if (!start) continue;
      std::vector<bool> seen(static_cast<std::size_t>(n), false);
      std::vector<int> stack{*start};
      seen[static_cast<std::size_t>(*start)] = true;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w = 0; w < n; ++w) {
          if (seen[static_cast<std::size_t>(w)]) continue;
          if (!graph->has_directed(v, w) && !graph->has_undirected(v, w)) continue;
          seen[static_cast<std::size_t>(w)] = true;
          stack.push_back(w);
          const int b = anomalous_at[static_cast<std::size_t>(w)];
          if (b >= 0 && static_cast<std::size_t>(b) != a) adj[a].push_back(b);
        }
      }
    }
  }
  // A metric qualifies when no anomalous ancestor exists outside its own
  // strongly connected component; undirected edges count both ways, so each
  // undirected cluster contributes its highest-scoring member.
  int count = 0;
  const auto comp = scc_ids(adj, &count);
  std::vector<bool> has_entry(static_cast<std::size_t>(count), false);
  for (std::size_t a = 0; a < k; ++a) {
    for (int b : adj[a]) {
      if (comp[a] != comp[static_cast<std::size_t>(b)]) {
        has_entry[static_cast<std::size_t>(comp[static_cast<std::size_t>(b)])] = true;
      }
    }
  }
  std::vector<int> best(static_cast<std::size_t>(count), -1);
  for (std::size_t a = 0; a < k; ++a) {
    const auto c = static_cast<std::size_t>(comp[a]);
    if (has_entry[c]) continue;
    const int cur = best[c];
    // anomalous is name-sorted, so keeping the first on ties picks the
    // lexicographically smallest name
    if (cur < 0 || z.at(anomalous[a]) > z.at(anomalous[static_cast<std::size_t>(cur)])) {
      best[c] = static_cast<int>(a);
    }
  }
  std::vector<std::string> out;
  for (int b : best) {
    if (b >= 0) out.push_back(anomalous[static_cast<std::size_t>(b)]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Diagnosis localize(const ServiceDependencyGraph& topology, const ServiceNode& entry,
                   const std::set<ServiceNode>& anomalous,
                   const std::map<ServiceNode, MetricDependencyGraph>& metric_graphs,
                   const MetricScores& scores, const AnomalyConfig& cfg, TimestampMs now_ms) {
  const auto entry_idx = topology.index_of(entry);
  if (!entry_idx) {
    throw Error(ErrorCode::kEntryNotInTopology, to_string(entry) + " is not in the topology");
  }
  Diagnosis d;
  d.entry = entry;
  d.anomalous_services = anomalous;
  d.produced_at_ms = now_ms;

  std::vector<bool> flags(topology.nodes.size());
  for (std::size_t i = 0; i < topology.nodes.size(); ++i) {
    flags[i] = anomalous.count(topology.nodes[i]) > 0;
  }

  struct Scored {
    RankedCause cause;
    std::string evidence;
  };
  std::vector<Scored> found;
  static const std::map<std::string, double> kNoScores;
  for (auto idx : candidate_services(topology, *entry_idx, flags)) {
    const auto& node = topology.nodes[idx];
    d.candidate_services.push_back(node);
    const auto sit = scores.find(node);
    const auto& z = sit == scores.end() ? kNoScores : sit->second;
    const auto git = metric_graphs.find(node);
    const MetricDependencyGraph* graph = git == metric_graphs.end() ? nullptr : &git->second;
    for (const auto& metric : candidate_metrics(graph, z, cfg.z_threshold)) {
      const double score = z.at(metric);
      std::ostringstream why;
      why << to_string(node) << " is the deepest anomalous service reachable from "
          << to_string(entry) << "; " << metric << " z=" << format_double(score)
          << " exceeds " << format_double(cfg.z_threshold)
          << (graph ? " with no anomalous parent in the metric graph"
                    : " (no metric graph available)");
      found.push_back({{node, metric, score}, why.str()});
    }
  }
  std::sort(found.begin(), found.end(), [](const Scored& a, const Scored& b) {
    if (a.cause.score != b.cause.score) return a.cause.score > b.cause.score;
    return std::tie(a.cause.node.ip, a.cause.node.service, a.cause.metric) <
           std::tie(b.cause.node.ip, b.cause.node.service, b.cause.metric);
  });
  for (auto& s : found) {
    d.ranked_causes.push_back(std::move(s.cause));
    d.evidence.push_back(std::move(s.evidence));
  }
  return d;
}

void to_json(nlohmann::json& j, const AnomalyConfig& cfg) {
  j = {{"z_threshold", cfg.z_threshold},
       {"cusum_k", cfg.cusum_k},
       {"cusum_h", cfg.cusum_h},
       {"baseline_len", cfg.baseline_len},
       {"detect_len", cfg.detect_len}};
}

void from_json(const nlohmann::json& j, AnomalyConfig& cfg) {
  cfg.z_threshold = j.value("z_threshold", cfg.z_threshold);
  cfg.cusum_k = j.value("cusum_k", cfg.cusum_k);
  cfg.cusum_h = j.value("cusum_h", cfg.cusum_h);
  cfg.baseline_len = j.value("baseline_len", cfg.baseline_len);
  cfg.detect_len = j.value("detect_len", cfg.detect_len);
}

nlohmann::json score_to_json(double score) {
  if (std::isinf(score)) return score > 0 ? "inf" : "-inf";
  return score;
}

double score_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfiniteScore;
    if (s == "-inf") return -kInfiniteScore;
    throw Error(ErrorCode::kInvalidArgument, "bad score " + s);
  }
  return j.get<double>();
}

void to_json(nlohmann::json& j, const Diagnosis& d) {
  j = nlohmann::json::object();
  j["entry"] = d.entry;
  j["anomalous_services"] = nlohmann::json(std::vector<ServiceNode>(
      d.anomalous_services.begin(), d.anomalous_services.end()));
  j["candidate_services"] = d.candidate_services;
  auto causes = nlohmann::json::array();
  for (const auto& c : d.ranked_causes) {
    causes.push_back({{"ip", c.node.ip},
                      {"service", c.node.service},
                      {"metric", c.metric},
                      {"score", score_to_json(c.score)}});
  }
  j["ranked_causes"] = std::move(causes);
  j["evidence"] = d.evidence;
  j["produced_at_ms"] = d.produced_at_ms;
}

void from_json(const nlohmann::json& j, Diagnosis& d) {
  d = Diagnosis{};
  d.entry = j.at("entry").get<ServiceNode>();
  for (const auto& n : j.at("anomalous_services")) d.anomalous_services.insert(n.get<ServiceNode>());
  d.candidate_services = j.value("candidate_services", std::vector<ServiceNode>{});
  for (const auto& c : j.at("ranked_causes")) {
    d.ranked_causes.push_back({{c.at("ip").get<std::string>(), c.at("service").get<std::string>()},
                               c.at("metric").get<std::string>(),
                               score_from_json(c.at("score"))});
  }
  d.evidence = j.value("evidence", std::vector<std::string>{});
  d.produced_at_ms = j.value("produced_at_ms", TimestampMs{0});
}

}  // namespace availscope
