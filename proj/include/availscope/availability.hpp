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

#ifndef AVAILSCOPE_AVAILABILITY_HPP_
#define AVAILSCOPE_AVAILABILITY_HPP_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "availscope/model.hpp"

namespace availscope {

enum class UpDownState { kUp, kDown };

struct UpDownEvent {
  TimestampMs ts_ms = 0;
  ServiceNode target;
  UpDownState state = UpDownState::kUp;

  bool operator==(const UpDownEvent&) const = default;
};

struct AvailabilityReport {
  ServiceNode target;
  double mttf_ms = 0.0;
  double mttr_ms = 0.0;
  double availability = 0.0;
  std::size_t n_failures = 0;
};

// Mean duration of completed up intervals (up followed by down) of one
// target's log. Throws kNoCompletedInterval or kNonAlternatingLog.
double mttf(std::span<const UpDownEvent> log);
// Same over completed down intervals.
double mttr(std::span<const UpDownEvent> log);
AvailabilityReport availability(std::span<const UpDownEvent> log);

struct ForecastResult {
  enum class Kind { kCrossing, kAlreadyExceeded, kNoTrend };
  Kind kind = Kind::kNoTrend;
  double crossing_ts_ms = 0.0;  // valid for kCrossing
  double slope = 0.0;           // score per ms
  double intercept = 0.0;
};

// OLS line over the trailing fit_window points of (ts_ms, score). Throws
// kTooFewPoints with fewer than two points in the window.
ForecastResult forecast_failure_time(std::span<const std::pair<TimestampMs, double>> history,
                                     double theta, std::size_t fit_window);

// One record per line: {"ts_ms":..,"ip":..,"service":..,"state":"up"|"down"}
std::string serialize_event_line(const UpDownEvent& event);
UpDownEvent parse_event_line(std::string_view line);
std::vector<UpDownEvent> load_event_log(const std::string& path);
// Splits a mixed log per target, keeping each target's order.
std::map<ServiceNode, std::vector<UpDownEvent>> split_by_target(
    std::span<const UpDownEvent> events);

void to_json(nlohmann::json& j, const AvailabilityReport& r);
void to_json(nlohmann::json& j, const ForecastResult& r);

}  // namespace availscope

#endif  // AVAILSCOPE_AVAILABILITY_HPP_
