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

#include "availscope/config.hpp"

#include <filesystem>
#include <fstream>

#include "availscope/error.hpp"

namespace availscope {

namespace fs = std::filesystem;

void AppConfig::validate() const {
  parse_endpoint(ingest.listen_endpoint);
  if (ingest.out_of_order_buffer_ms < 0) {
    throw Error(ErrorCode::kInvalidConfig, "out_of_order_buffer_ms must be >= 0");
  }
  if (ingest.store_capacity_per_key < 2 * entropy.window_len) {
    throw Error(ErrorCode::kInvalidConfig,
                "store_capacity_per_key must be at least twice entropy.window_len");
  }
  if (interval_ms < 1) throw Error(ErrorCode::kInvalidConfig, "interval_ms must be >= 1");
  entropy.validate();
  pc.validate();
  anomaly.validate();
  policy.validate();
  if (maintenance_cycle_s < 1) {
    throw Error(ErrorCode::kInvalidConfig, "maintenance cycle_s must be >= 1");
  }
}

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

AppConfig config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  AppConfig cfg;
  try {
    if (j.contains("ingest")) {
      const auto& in = j.at("ingest");
      cfg.ingest.listen_endpoint = in.value("listen_endpoint", cfg.ingest.listen_endpoint);
      cfg.ingest.out_of_order_buffer_ms =
          in.value("out_of_order_buffer_ms", cfg.ingest.out_of_order_buffer_ms);
      cfg.ingest.store_capacity_per_key =
          in.value("store_capacity_per_key", cfg.ingest.store_capacity_per_key);
    }
    if (j.contains("align")) {
      const auto& al = j.at("align");
      cfg.interval_ms = al.value("interval_ms", cfg.interval_ms);
      const auto agg = al.value("aggregation", std::string("mean"));
      if (agg == "mean") {
        cfg.aggregation = Aggregation::kMean;
      } else if (agg == "last") {
        cfg.aggregation = Aggregation::kLast;
      } else {
        throw Error(ErrorCode::kInvalidConfig, "aggregation must be mean or last");
      }
    }
    if (j.contains("entropy")) j.at("entropy").get_to(cfg.entropy);
    if (j.contains("pc")) j.at("pc").get_to(cfg.pc);
    if (j.contains("anomaly")) j.at("anomaly").get_to(cfg.anomaly);
    if (j.contains("maintenance")) {
      const auto& m = j.at("maintenance");
      from_json(m, cfg.policy);
      cfg.maintenance_cycle_s = m.value("cycle_s", cfg.maintenance_cycle_s);
    }
    cfg.topology_path = resolve(j.value("topology", std::string()), base_dir);
    cfg.events_path = resolve(j.value("events", std::string()), base_dir);
    if (j.contains("entry")) {
      const auto text = j.at("entry").get<std::string>();
      cfg.entry = parse_service_node(text);
      if (!cfg.entry) throw Error(ErrorCode::kInvalidConfig, "bad entry " + text);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileUnreadable, "cannot read config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, "config " + path + ": " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

nlohmann::json config_to_json(const AppConfig& cfg) {
  nlohmann::json maintenance = cfg.policy;
  maintenance["cycle_s"] = cfg.maintenance_cycle_s;
  nlohmann::json j = {
      {"ingest",
       {{"listen_endpoint", cfg.ingest.listen_endpoint},
        {"out_of_order_buffer_ms", cfg.ingest.out_of_order_buffer_ms},
        {"store_capacity_per_key", cfg.ingest.store_capacity_per_key}}},
      {"align",
       {{"interval_ms", cfg.interval_ms},
        {"aggregation", cfg.aggregation == Aggregation::kMean ? "mean" : "last"}}},
      {"entropy", cfg.entropy},
      {"pc", cfg.pc},
      {"anomaly", cfg.anomaly},
      {"maintenance", std::move(maintenance)},
  };
  if (!cfg.topology_path.empty()) j["topology"] = cfg.topology_path;
  if (!cfg.events_path.empty()) j["events"] = cfg.events_path;
  if (cfg.entry) j["entry"] = to_string(*cfg.entry);
  return j;
}

}  // namespace availscope
