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

#include <map>
#include <random>

#include "availscope/error.hpp"
#include "availscope/model.hpp"
#include "doctest.h"

using namespace availscope;

namespace {

MetricSeries series_of(std::vector<SeriesPoint> pts) {
  return {{"10.0.0.1", "web", "cpu"}, std::move(pts)};
}

}  // namespace

TEST_CASE("align buckets one sample per interval") {
  const std::vector<MetricSeries> s{series_of({{0, 1.0}, {1000, 3.0}})};
  const auto m = align(s, 1000);
  REQUIRE(m.num_rows() == 2);
  CHECK(*m.rows[0][0] == 1.0);
  CHECK(*m.rows[1][0] == 3.0);
}

TEST_CASE("align averages co-bucketed samples") {
  const std::vector<MetricSeries> s{series_of({{0, 1.0}, {500, 3.0}})};
  const auto m = align(s, 1000);
  REQUIRE(m.num_rows() == 1);
  CHECK(*m.rows[0][0] == 2.0);

  const auto last = align(s, 1000, Aggregation::kLast);
  CHECK(*last.rows[0][0] == 3.0);
}

TEST_CASE("align leaves absent cells for disjoint series") {
  auto a = series_of({{0, 1.0}, {2000, 1.0}});
  auto b = series_of({{1000, 5.0}});
  b.key.metric = "mem";
  const std::vector<MetricSeries> s{a, b};
  const auto m = align(s, 1000);
  REQUIRE(m.num_rows() == 3);
  CHECK(m.rows[0][0].has_value());
  CHECK_FALSE(m.rows[0][1].has_value());
  CHECK_FALSE(m.rows[1][0].has_value());
  CHECK(*m.rows[1][1] == 5.0);
  CHECK(m.num_complete_rows() == 0);
}

TEST_CASE("align matches per-bucket brute force") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<TimestampMs> gap(1, 900);
  std::normal_distribution<double> val(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    MetricSeries s = series_of({});
    TimestampMs t = 12345;
    for (int i = 0; i < 200; ++i) {
      t += gap(rng);
      s.points.push_back({t, val(rng)});
    }
    const TimestampMs interval = 250 + 50 * trial;
    const std::vector<MetricSeries> in{s};
    const auto m = align(in, interval);
    std::map<TimestampMs, std::pair<double, int>> buckets;
    for (const auto& p : s.points) {
      auto& b = buckets[p.ts_ms / interval];
      b.first += p.value;
      b.second += 1;
    }
    for (std::size_t r = 0; r < m.num_rows(); ++r) {
      const auto it = buckets.find(m.start_ms / interval + static_cast<TimestampMs>(r));
      if (it == buckets.end()) {
        CHECK_FALSE(m.rows[r][0].has_value());
      } else {
        REQUIRE(m.rows[r][0].has_value());
        CHECK(*m.rows[r][0] == doctest::Approx(it->second.first / it->second.second).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("align rejects bad input") {
  const std::vector<MetricSeries> none;
  CHECK_THROWS_AS(align(none, 1000), Error);
  const std::vector<MetricSeries> s{series_of({{0, 1.0}})};
  CHECK_THROWS_AS(align(s, 0), Error);
}

TEST_CASE("window counts") {
  MetricSeries s = series_of({});
  for (int i = 0; i < 10; ++i) s.points.push_back({i, static_cast<double>(i)});
  CHECK(window(s, 5, 5).size() == 2);
  CHECK(window(s, 5, 1).size() == 6);
  s.points.resize(3);
  CHECK(window(s, 5, 1).empty());

  for (std::size_t n = 0; n < 30; ++n) {
    MetricSeries t = series_of({});
    for (std::size_t i = 0; i < n; ++i) t.points.push_back({static_cast<TimestampMs>(i), 0.0});
    for (std::size_t len = 1; len < 8; ++len) {
      for (std::size_t stride = 1; stride < 5; ++stride) {
        const std::size_t expect = n < len ? 0 : (n - len) / stride + 1;
        CHECK(window(t, len, stride).size() == expect);
      }
    }
  }
}

TEST_CASE("validate_topology") {
  ServiceDependencyGraph g{{{"a", "1"}, {"b", "2"}, {"c", "3"}}, {{0, 1}, {1, 2}}};
  CHECK(validate_topology(g).empty());

  g.edges = {{0, 5}};
  auto r = validate_topology(g);
  REQUIRE(r.size() == 1);
  CHECK(r[0].kind == TopologyViolation::Kind::kDanglingEdge);

  g.edges = {{1, 1}};
  r = validate_topology(g);
  REQUIRE(r.size() == 1);
  CHECK(r[0].kind == TopologyViolation::Kind::kSelfLoop);

  g.edges.clear();
  g.nodes.push_back({"a", "1"});
  r = validate_topology(g);
  REQUIRE(r.size() == 1);
  CHECK(r[0].kind == TopologyViolation::Kind::kDuplicateNode);
}

TEST_CASE("service node text form") {
  CHECK(parse_service_node("10.0.0.3:mysql") == ServiceNode{"10.0.0.3", "mysql"});
  CHECK_FALSE(parse_service_node("nocolon").has_value());
  CHECK_FALSE(parse_service_node(":x").has_value());
  CHECK(to_string(ServiceNode{"h", "s"}) == "h:s");
}

TEST_CASE("metric graph edges and acyclicity") {
  MetricDependencyGraph g;
  g.metrics = {"a", "b", "c"};
  g.add_undirected(0, 1);
  CHECK(g.has_undirected(1, 0));
  g.orient(1, 0);
  CHECK(g.has_directed(1, 0));
  CHECK_FALSE(g.has_undirected(0, 1));
  g.orient(0, 2);
  CHECK(directed_part_acyclic(g));
  g.orient(2, 1);
  CHECK_FALSE(directed_part_acyclic(g));

  nlohmann::json j = g;
  CHECK(j.get<MetricDependencyGraph>() == g);
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(4.2) == "4.2");
  CHECK(format_double(1e21) == "1e+21");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("population stddev") {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean(xs) == 5.0);
  CHECK(stddev(xs) == 2.0);
}
