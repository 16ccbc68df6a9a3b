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

// Recovery decisions. A diagnosis' top cause is mapped to a cause category,
// the cheapest applicable action is chosen and emitted as an XML message.
// Actions are never executed here.

#ifndef AVAILSCOPE_MAINTENANCE_HPP_
#define AVAILSCOPE_MAINTENANCE_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "availscope/rootcause.hpp"

namespace availscope {

// Declaration order is the cost tie-break order.
enum class ActionKind { kRestart, kReconfigure, kMigrate, kScale };
enum class CauseCategory { kCpu, kMemory, kIo, kConfig, kUnknown };

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> parse_action_kind(std::string_view text);
std::string_view to_string(CauseCategory category);
std::optional<CauseCategory> parse_cause_category(std::string_view text);

struct MaintenancePolicy {
  std::map<ActionKind, double> costs;
  std::map<CauseCategory, std::set<ActionKind>> applicability;
  // (ECMAScript regex searched in the metric name, category); first match wins.
  std::vector<std::pair<std::string, CauseCategory>> cause_category_rules;

  // Throws Error(kInvalidConfig).
  void validate() const;
  CauseCategory categorize(const std::string& metric) const;

  static MaintenancePolicy defaults();
};

struct MaintenanceAction {
  std::string id;
  TimestampMs issued_at_ms = 0;
  ServiceNode target;
  ActionKind kind = ActionKind::kRestart;
  std::string reason_metric;
  double reason_score = 0.0;
  int cycle_s = 300;

  bool operator==(const MaintenanceAction&) const = default;
};

struct ActionContext {
  std::string id = "act-1";
  TimestampMs issued_at_ms = 0;
  int cycle_s = 300;
};

// Empty when the diagnosis has no ranked cause.
std::optional<MaintenanceAction> decide_action(const Diagnosis& diag,
                                               const MaintenancePolicy& policy,
                                               const ActionContext& ctx = {});

std::string serialize_action_xml(const MaintenanceAction& action);
// Throws kMalformedXml, kUnknownAction or kMissingElement.
MaintenanceAction parse_action_xml(std::string_view doc);

struct MaintenancePipeline {
  std::function<bool()> health_alarm;
  std::function<Diagnosis()> diagnose;
};

using ActionEmitter = std::function<void(const std::string& xml, const MaintenanceAction&)>;

struct CycleCounters {
  std::uint64_t ticks = 0;
  std::uint64_t alarms = 0;
  std::uint64_t actions = 0;
  std::uint64_t skipped = 0;
  std::uint64_t failures = 0;
};

// Periodic maintenance cycle. One evaluation at a time; ticks that fall due
// while an evaluation is still running are skipped and counted. The cycle
// length can be changed at any time and applies from the next tick on.
class MaintenanceLoop {
 public:
  MaintenanceLoop(MaintenancePolicy policy, MaintenancePipeline pipeline, ActionEmitter emitter,
                  int cycle_s, std::chrono::milliseconds unit = std::chrono::seconds(1));
  ~MaintenanceLoop();

  MaintenanceLoop(const MaintenanceLoop&) = delete;
  MaintenanceLoop& operator=(const MaintenanceLoop&) = delete;

  void start();
  void stop();
  void set_cycle(int cycle_s);
  int cycle() const { return cycle_s_.load(); }

  // Runs one evaluation synchronously; returns the emitted action, if any.
  std::optional<MaintenanceAction> tick();

  CycleCounters counters() const;

 private:
  void run();

  MaintenancePolicy policy_;
  MaintenancePipeline pipeline_;
  ActionEmitter emitter_;
  std::atomic<int> cycle_s_;
  std::chrono::milliseconds unit_;

  std::mutex eval_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool running_ = false;
  std::thread worker_;

  std::atomic<std::uint64_t> ticks_{0}, alarms_{0}, actions_{0}, skipped_{0}, failures_{0};
  std::uint64_t next_id_ = 1;
};

// Blocking form of MaintenanceLoop.
[[noreturn]] void run_cycle(int cycle_s, MaintenancePipeline pipeline, ActionEmitter emitter,
                            MaintenancePolicy policy = MaintenancePolicy::defaults());

void to_json(nlohmann::json& j, const MaintenancePolicy& p);
void from_json(const nlohmann::json& j, MaintenancePolicy& p);
void to_json(nlohmann::json& j, const MaintenanceAction& a);

}  // namespace availscope

#endif  // AVAILSCOPE_MAINTENANCE_HPP_
