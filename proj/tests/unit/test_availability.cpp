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

#include <cmath>
#include <fstream>
#include <functional>
#include <random>

#include "availscope/availability.hpp"
#include "availscope/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace availscope;

namespace {

const ServiceNode kDb{"10.0.0.3", "mysql"};

// Alternating log starting "up" at t0: up[0], down[0], up[1], down[1], ...
// followed by a closing event so every listed interval is completed.
std::vector<UpDownEvent> make_log(const std::vector<TimestampMs>& up,
                                  const std::vector<TimestampMs>& down, TimestampMs t0 = 0) {
  std::vector<UpDownEvent> log;
  TimestampMs t = t0;
  const auto n = std::max(up.size(), down.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i < up.size()) {
      log.push_back({t, kDb, UpDownState::kUp});
      t += up[i];
    }
    if (i < down.size()) {
      log.push_back({t, kDb, UpDownState::kDown});
      t += down[i];
    }
  }
  log.push_back({t, kDb, log.back().state == UpDownState::kUp ? UpDownState::kDown
                                                               : UpDownState::kUp});
  return log;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("mttf") {
  CHECK(mttf(make_log({100, 200, 300}, {5, 5})) == 200.0);
  const std::vector<UpDownEvent> never{{0, kDb, UpDownState::kUp}};
  CHECK(code_of([&] { mttf(never); }) == ErrorCode::kNoCompletedInterval);
  const std::vector<UpDownEvent> bad{
      {0, kDb, UpDownState::kUp}, {1, kDb, UpDownState::kDown}, {2, kDb, UpDownState::kDown}};
  CHECK(code_of([&] { mttf(bad); }) == ErrorCode::kNonAlternatingLog);
  const std::vector<UpDownEvent> backwards{{5, kDb, UpDownState::kUp},
                                           {5, kDb, UpDownState::kDown}};
  CHECK(code_of([&] { mttf(backwards); }) == ErrorCode::kNonAlternatingLog);
}

TEST_CASE("mttr") {
  CHECK(mttr(make_log({50, 50}, {10, 30})) == 20.0);
  CHECK(mttr(make_log({50}, {5})) == 5.0);
  const std::vector<UpDownEvent> up_only{{0, kDb, UpDownState::kUp}, {9, kDb, UpDownState::kDown}};
  CHECK(code_of([&] { mttr(up_only); }) == ErrorCode::kNoCompletedInterval);
}

TEST_CASE("availability ratio") {
  auto r = availability(make_log({1999}, {1}));
  CHECK(r.availability == 0.9995);
  CHECK(r.n_failures == 1);
  CHECK(r.target == kDb);
  CHECK(availability(make_log({7}, {7})).availability == 0.5);
  CHECK(availability(make_log({999}, {1})).availability == 0.999);

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<TimestampMs> d(1, 100000);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TimestampMs> ups, downs;
    const auto k = 1 + trial % 7;
    for (int i = 0; i < k; ++i) {
      ups.push_back(d(rng));
      downs.push_back(d(rng));
    }
    const auto log = make_log(ups, downs);
    const auto rep = availability(log);
    CHECK(rep.availability == rep.mttf_ms / (rep.mttf_ms + rep.mttr_ms));
    CHECK(rep.availability > 0.0);
    CHECK(rep.availability < 1.0);
    const auto shifted = make_log(ups, downs, 1'700'000'000'000);
    CHECK(mttf(shifted) == rep.mttf_ms);
    CHECK(mttr(shifted) == rep.mttr_ms);
  }
}

TEST_CASE("trailing open interval is excluded") {
  std::vector<UpDownEvent> log{{0, kDb, UpDownState::kUp},
                               {100, kDb, UpDownState::kDown},
                               {110, kDb, UpDownState::kUp}};
  CHECK(mttf(log) == 100.0);
  CHECK(mttr(log) == 10.0);
}

TEST_CASE("forecast") {
  const std::vector<std::pair<TimestampMs, double>> h{{0, 0.1}, {1, 0.2}, {2, 0.3}};
  auto f = forecast_failure_time(h, 0.6, 10);
  REQUIRE(f.kind == ForecastResult::Kind::kCrossing);
  CHECK(f.crossing_ts_ms == doctest::Approx(5.0).epsilon(1e-12));

  const std::vector<std::pair<TimestampMs, double>> flat{{0, 0.2}, {1, 0.2}, {2, 0.2}};
  CHECK(forecast_failure_time(flat, 0.6, 10).kind == ForecastResult::Kind::kNoTrend);

  const std::vector<std::pair<TimestampMs, double>> over{{0, 0.5}, {1, 0.7}};
  CHECK(forecast_failure_time(over, 0.6, 10).kind == ForecastResult::Kind::kAlreadyExceeded);

  const std::vector<std::pair<TimestampMs, double>> falling{{0, 0.5}, {1, 0.4}};
  CHECK(forecast_failure_time(falling, 0.6, 10).kind == ForecastResult::Kind::kNoTrend);

  const std::vector<std::pair<TimestampMs, double>> one{{0, 0.5}};
  CHECK(code_of([&] { forecast_failure_time(one, 0.6, 10); }) == ErrorCode::kTooFewPoints);

  // only the trailing fit_window points are used
  const std::vector<std::pair<TimestampMs, double>> bent{
      {0, 0.0}, {1, 0.0}, {2, 0.0}, {3, 0.1}, {4, 0.2}};
  f = forecast_failure_time(bent, 0.5, 2);
  REQUIRE(f.kind == ForecastResult::Kind::kCrossing);
  CHECK(f.crossing_ts_ms == doctest::Approx(7.0));
}

TEST_CASE("forecast exact on noiseless epoch-scale lines") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const TimestampMs t0 = 1'700'000'000'000 + static_cast<TimestampMs>(u(rng) * 1e9);
    const TimestampMs step = 1000 * (1 + trial % 10);
    const double slope = (0.01 + u(rng)) / static_cast<double>(step);
    const double b = 0.1 * u(rng);
    std::vector<std::pair<TimestampMs, double>> h;
    for (int i = 0; i < 20; ++i) {
      const TimestampMs t = t0 + i * step;
      h.push_back({t, b + slope * static_cast<double>(t - t0)});
    }
    const double theta = h.back().second + 0.5 + u(rng);
    const double truth = static_cast<double>(t0) + (theta - b) / slope;
    const auto f = forecast_failure_time(h, theta, 20);
    REQUIRE(f.kind == ForecastResult::Kind::kCrossing);
    CHECK(std::fabs(f.crossing_ts_ms - truth) / truth < 1e-9);
  }
}

TEST_CASE("event log lines") {
  const UpDownEvent e{1700000000000, kDb, UpDownState::kDown};
  const auto line = serialize_event_line(e);
  CHECK(line == "{\"ts_ms\":1700000000000,\"ip\":\"10.0.0.3\",\"service\":\"mysql\",\"state\":\"down\"}\n");
  CHECK(parse_event_line(line) == e);
  CHECK(code_of([] { parse_event_line("{\"ts_ms\":1}"); }) == ErrorCode::kMalformedRecord);
  CHECK(code_of([] {
          parse_event_line(R"({"ts_ms":1,"ip":"a","service":"b","state":"sideways"})");
        }) == ErrorCode::kMalformedRecord);

  const auto dir = oracle::scratch_dir("events");
  {
    std::ofstream out(dir / "e.ndjson");
    out << "# header\n" << serialize_event_line(e) << serialize_event_line({5, {"a", "b"}, UpDownState::kUp});
  }
  const auto log = load_event_log((dir / "e.ndjson").string());
  CHECK(log.size() == 2);
  const auto split = split_by_target(log);
  CHECK(split.size() == 2);
  CHECK(split.at(kDb).size() == 1);
  std::filesystem::remove_all(dir);
}
