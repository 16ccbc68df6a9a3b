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

#include "availscope/availability.hpp"

#include <fstream>

#include "availscope/error.hpp"

namespace availscope {

namespace {

void check_log(std::span<const UpDownEvent> log) {
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (log[i].state == log[i - 1].state) {
      throw Error(ErrorCode::kNonAlternatingLog,
                  "event " + std::to_string(i) + " repeats the previous state");
    }
    if (log[i].ts_ms <= log[i - 1].ts_ms) {
      throw Error(ErrorCode::kNonAlternatingLog,
                  "event " + std::to_string(i) + " is not after the previous event");
    }
  }
}

// Mean length of intervals that start in `state` and are closed by the next event.
double mean_interval(std::span<const UpDownEvent> log, UpDownState state, const char* what) {
  check_log(log);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < log.size(); ++i) {
    if (log[i].state != state) continue;
    total += static_cast<double>(log[i + 1].ts_ms - log[i].ts_ms);
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorCode::kNoCompletedInterval, std::string("no completed ") + what + " interval");
  }
  return total / static_cast<double>(count);
}

}  // namespace

double mttf(std::span<const UpDownEvent> log) {
  return mean_interval(log, UpDownState::kUp, "up");
}

double mttr(std::span<const UpDownEvent> log) {
  return mean_interval(log, UpDownState::kDown, "down");
}

AvailabilityReport availability(std::span<const UpDownEvent> log) {
  AvailabilityReport r;
  if (!log.empty()) r.target = log.front().target;
  r.mttf_ms = mttf(log);
  r.mttr_ms = mttr(log);
  r.availability = r.mttf_ms / (r.mttf_ms + r.mttr_ms);
  for (std::size_t i = 0; i + 1 < log.size(); ++i) {
    if (log[i].state == UpDownState::kDown) ++r.n_failures;
  }
  return r;
}

ForecastResult forecast_failure_time(std::span<const std::pair<TimestampMs, double>> history,
                                     double theta, std::size_t fit_window) {
  const std::size_t n = std::min(fit_window, history.size());
  if (n < 2) throw Error(ErrorCode::kTooFewPoints, "forecast needs at least 2 points");
  const auto fit = history.subspan(history.size() - n);

  // centre time for conditioning; epoch milliseconds are ~1e12
  double tx = 0.0, ty = 0.0;
  for (const auto& [t, y] : fit) {
    tx += static_cast<double>(t);
    ty += y;
  }
  const double mx = tx / static_cast<double>(n);
  const double my = ty / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [t, y] : fit) {
    const double dx = static_cast<double>(t) - mx;
    sxx += dx * dx;
    sxy += dx * (y - my);
  }

  ForecastResult out;
  out.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  out.intercept = my - out.slope * mx;
  const auto& latest = fit.back();
  if (latest.second > theta) {
    out.kind = ForecastResult::Kind::kAlreadyExceeded;
    return out;
  }
  if (out.slope <= 1e-12) {
    out.kind = ForecastResult::Kind::kNoTrend;
    return out;
  }
  const double crossing = mx + (theta - my) / out.slope;
  if (crossing < static_cast<double>(latest.first)) {
    out.kind = ForecastResult::Kind::kNoTrend;
    return out;
  }
  out.kind = ForecastResult::Kind::kCrossing;
  out.crossing_ts_ms = crossing;
  return out;
}

std::string serialize_event_line(const UpDownEvent& event) {
  return "{\"ts_ms\":" + std::to_string(event.ts_ms) +
         ",\"ip\":" + nlohmann::json(event.target.ip).dump() +
         ",\"service\":" + nlohmann::json(event.target.service).dump() + ",\"state\":\"" +
         (event.state == UpDownState::kUp ? "up" : "down") + "\"}\n";
}

UpDownEvent parse_event_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    UpDownEvent e;
    e.ts_ms = j.at("ts_ms").get<TimestampMs>();
    e.target.ip = j.at("ip").get<std::string>();
    e.target.service = j.at("service").get<std::string>();
    const auto state = j.at("state").get<std::string>();
    if (state == "up") {
      e.state = UpDownState::kUp;
    } else if (state == "down") {
      e.state = UpDownState::kDown;
    } else {
      throw Error(ErrorCode::kMalformedRecord, "bad state in event: " + std::string(line));
    }
    return e;
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kMalformedRecord, "malformed event: " + std::string(line));
  }
}

std::vector<UpDownEvent> load_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileUnreadable, "cannot read event log " + path);
  std::vector<UpDownEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(parse_event_line(line));
  }
  return out;
}

std::map<ServiceNode, std::vector<UpDownEvent>> split_by_target(
    std::span<const UpDownEvent> events) {
  std::map<ServiceNode, std::vector<UpDownEvent>> out;
  for (const auto& e : events) out[e.target].push_back(e);
  return out;
}

void to_json(nlohmann::json& j, const AvailabilityReport& r) {
  j = {{"target", r.target},
       {"mttf_ms", r.mttf_ms},
       {"mttr_ms", r.mttr_ms},
       {"availability", r.availability},
       {"n_failures", r.n_failures}};
}

void to_json(nlohmann::json& j, const ForecastResult& r) {
  switch (r.kind) {
    case ForecastResult::Kind::kCrossing:
      j = {{"result", "crossing"}, {"crossing_ts_ms", r.crossing_ts_ms}};
      break;
    case ForecastResult::Kind::kAlreadyExceeded:
      j = {{"result", "already_exceeded"}};
      break;
    case ForecastResult::Kind::kNoTrend:
      j = {{"result", "no_trend"}};
      break;
  }
  j["slope_per_ms"] = r.slope;
  j["intercept"] = r.intercept;
}

}  // namespace availscope
