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

// The running engine behind `availctl serve`: metric store, method bus,
// subscriptions, cached reports, the maintenance loop and the request
// router. The router is transport independent; http_server.hpp binds it to
// HTTP.
//
// Routes (JSON bodies):
//   POST   /subscriptions          {"method","target":{"ip","service"[,"metric"]},"params","period_s"}
//   DELETE /subscriptions/{id}
//   GET    /subscriptions
//   GET    /methods
//   GET    /health/{ip}/{service}
//   GET    /diagnosis/latest
//   POST   /diagnosis/run          {"entry":"ip:service"}
//   GET    /availability/{ip}/{service}
//   PUT    /params                 {"maintenance_cycle_s","alarm_threshold","alpha"}
//   GET    /params
//   GET    /actions

#ifndef AVAILSCOPE_ENGINE_HPP_
#define AVAILSCOPE_ENGINE_HPP_

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "availscope/config.hpp"
#include "availscope/ingest.hpp"
#include "availscope/maintenance.hpp"
#include "availscope/method_bus.hpp"
#include "availscope/pipeline.hpp"

namespace availscope {

struct ApiRequest {
  std::string method;  // GET, POST, PUT, DELETE
  std::string path;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

using SubscriptionTarget = std::variant<ServiceNode, MetricKey>;

struct Subscription {
  std::string id;
  std::string method;
  SubscriptionTarget target;
  nlohmann::json params = nlohmann::json::object();
  int period_s = 60;
  TimestampMs created_at_ms = 0;
  std::optional<AnalysisReport> last_report;
  std::string last_error;
};

class Engine {
 public:
  // time_unit is the length of one "second" for every period and cycle;
  // tests shrink it.
  explicit Engine(AppConfig cfg, std::chrono::milliseconds time_unit = std::chrono::seconds(1));
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  MetricStore& store() { return store_; }
  MethodBus& bus() { return bus_; }

  void set_topology(ServiceDependencyGraph topology);
  ServiceDependencyGraph topology() const;
  void set_events(std::vector<UpDownEvent> events);

  ApiResponse handle(const ApiRequest& request);

  // Starts the subscription scheduler and the maintenance loop.
  void start();
  void stop();

  // One synchronous maintenance evaluation.
  std::optional<MaintenanceAction> maintenance_tick();
  CycleCounters maintenance_counters() const;
  int maintenance_cycle() const;
  std::vector<std::string> emitted_actions() const;

  // Runs every subscription now, regardless of its period.
  void run_subscriptions_now();

 private:
  struct SubState {
    Subscription sub;
    std::chrono::steady_clock::time_point next_due;
  };

  ApiResponse post_subscription(const nlohmann::json& body);
  ApiResponse delete_subscription(const std::string& id);
  ApiResponse list_subscriptions();
  ApiResponse list_methods();
  ApiResponse get_health(const ServiceNode& node);
  ApiResponse get_latest_diagnosis();
  ApiResponse run_diagnosis_route(const nlohmann::json& body);
  ApiResponse get_availability(const ServiceNode& node);
  ApiResponse put_params(const nlohmann::json& body);
  ApiResponse get_params();
  ApiResponse get_actions();

  AppConfig config_copy() const;
  void run_subscription(Subscription& sub);
  bool evaluate_health();
  Diagnosis diagnose_now(const std::optional<ServiceNode>& entry);
  void scheduler_loop();

  mutable std::shared_mutex cfg_mu_;
  AppConfig cfg_;
  ServiceDependencyGraph topology_;
  std::vector<UpDownEvent> events_;

  MetricStore store_;
  MethodBus bus_;
  std::chrono::milliseconds unit_;

  mutable std::mutex cache_mu_;
  std::map<ServiceNode, HealthReport> health_;
  std::optional<Diagnosis> latest_diagnosis_;
  std::vector<std::string> actions_;

  mutable std::mutex sub_mu_;
  std::map<std::string, SubState> subs_;
  std::uint64_t next_sub_ = 1;
  std::condition_variable sub_cv_;
  bool sched_running_ = false;
  std::thread scheduler_;

  std::unique_ptr<MaintenanceLoop> loop_;
};

// Splits "/a/b/c" into {"a","b","c"}; percent-escapes are decoded.
std::vector<std::string> split_path(const std::string& path);

void to_json(nlohmann::json& j, const Subscription& s);

}  // namespace availscope

#endif  // AVAILSCOPE_ENGINE_HPP_
