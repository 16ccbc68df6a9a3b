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

// Engine configuration file:
//
//   {
//     "ingest":      {"listen_endpoint": "127.0.0.1:9100", "out_of_order_buffer_ms": 5000,
//                     "store_capacity_per_key": 4096},
//     "align":       {"interval_ms": 1000, "aggregation": "mean"},
//     "entropy":     {...}, "pc": {...}, "anomaly": {...},
//     "maintenance": {"cycle_s": 300, "costs": {...}, "applicability": {...},
//                     "cause_category_rules": [["^cpu", "cpu"], ...]},
//     "topology":    "topology.json",
//     "events":      "events.ndjson",
//     "entry":       "10.0.0.1:apache"
//   }
//
// Every section is optional. Relative paths are resolved against the
// directory holding the config file.

#ifndef AVAILSCOPE_CONFIG_HPP_
#define AVAILSCOPE_CONFIG_HPP_

#include <optional>
#include <string>

#include "availscope/causal.hpp"
#include "availscope/entropy.hpp"
#include "availscope/ingest.hpp"
#include "availscope/maintenance.hpp"
#include "availscope/rootcause.hpp"

namespace availscope {

struct AppConfig {
  IngestConfig ingest;
  TimestampMs interval_ms = 1000;
  Aggregation aggregation = Aggregation::kMean;
  EntropyConfig entropy;
  PCConfig pc;
  AnomalyConfig anomaly;
  MaintenancePolicy policy = MaintenancePolicy::defaults();
  int maintenance_cycle_s = 300;
  std::string topology_path;
  std::string events_path;
  std::optional<ServiceNode> entry;

  // Throws Error(kInvalidConfig).
  void validate() const;
};

// Throws kFileUnreadable or kInvalidConfig.
AppConfig load_config(const std::string& path);
AppConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = {});
nlohmann::json config_to_json(const AppConfig& cfg);

}  // namespace availscope

#endif  // AVAILSCOPE_CONFIG_HPP_
