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

// End-to-end diagnosis over a set of raw metric series:
//
//   align per service -> z-scores (leading baseline vs trailing window)
//                     -> entropy health over the trailing window_len rows
//   -> anomalous services -> metric graphs for the level-1 candidates
//   -> two-level localization

#ifndef AVAILSCOPE_PIPELINE_HPP_
#define AVAILSCOPE_PIPELINE_HPP_

#include <map>
#include <string>
#include <vector>

#include "availscope/causal.hpp"
#include "availscope/config.hpp"
#include "availscope/entropy.hpp"
#include "availscope/rootcause.hpp"

namespace availscope {

struct ServiceState {
  ServiceObservation observation;
  std::map<std::string, std::vector<double>> columns;  // per metric, aligned, gaps dropped
  MetricMatrix matrix;
};

struct PipelineResult {
  Diagnosis diagnosis;
  std::map<ServiceNode, HealthReport> health;
  std::map<ServiceNode, LearnedGraph> graphs;
  MetricScores scores;
  std::vector<std::string> warnings;
};

// Groups series by service and computes each topology node's observation.
// Nodes without any series are left out.
std::map<ServiceNode, ServiceState> observe_services(const ServiceDependencyGraph& topology,
                                                     const std::vector<MetricSeries>& series,
                                                     const AppConfig& cfg, TimestampMs now_ms,
                                                     std::vector<std::string>* warnings = nullptr);

// Throws kEntryNotInTopology.
PipelineResult run_diagnosis(const ServiceDependencyGraph& topology,
                             const std::vector<MetricSeries>& series, const ServiceNode& entry,
                             const AppConfig& cfg, TimestampMs now_ms = 0);

void to_json(nlohmann::json& j, const PipelineResult& r);

}  // namespace availscope

#endif  // AVAILSCOPE_PIPELINE_HPP_
