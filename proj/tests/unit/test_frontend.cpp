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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "availscope/cli.hpp"
#include "availscope/config.hpp"
#include "availscope/engine.hpp"
#include "availscope/error.hpp"
#include "availscope/faultsim.hpp"
#include "availscope/http_server.hpp"
#include "availscope/pipeline.hpp"
#include "doctest.h"
#include "httplib.h"
#include "oracles.hpp"

using namespace availscope;
using namespace std::chrono_literals;

namespace {

const ServiceNode kDb{"10.0.0.3", "mysql"};

SimOutput hog_run(std::uint64_t seed = 2) {
  auto spec = three_tier_spec(seed, 0.5, 400);
  spec.faults.push_back({370, 400, kDb, "cpu_util", FaultKind::kCpuHog, 8.0});
  return simulate(spec);
}

void feed(Engine& engine, const SimOutput& out) {
  engine.set_topology(out.topology);
  for (const auto& s : out.samples) engine.store().insert(s);
}

ApiResponse call(Engine& e, const std::string& method, const std::string& path,
                 const std::string& body = {}) {
  return e.handle({method, path, body});
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "availctl");
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("path splitting") {
  CHECK(split_path("/health/10.0.0.3/mysql") ==
        std::vector<std::string>{"health", "10.0.0.3", "mysql"});
  CHECK(split_path("//a//b/?x=1") == std::vector<std::string>{"a", "b"});
  CHECK(split_path("/health/10.0.0.3/my%20sql") ==
        std::vector<std::string>{"health", "10.0.0.3", "my sql"});
}

TEST_CASE("engine routes without data") {
  Engine engine(AppConfig{});
  auto r = call(engine, "GET", "/health/10.0.0.3/mysql");
  CHECK(r.status == 404);
  CHECK(r.body["error"] == "no_report");

  CHECK(call(engine, "GET", "/diagnosis/latest").status == 404);
  CHECK(call(engine, "GET", "/availability/10.0.0.3/mysql").status == 404);
  CHECK(call(engine, "GET", "/nowhere").status == 404);
  CHECK(call(engine, "PATCH", "/params").status == 404);

  r = call(engine, "GET", "/methods");
  CHECK(r.status == 200);
  CHECK(r.body["methods"].size() == 7);

  r = call(engine, "POST", "/subscriptions", "{not json");
  CHECK(r.status == 400);
  CHECK(r.body["error"] == "malformed_body");

  // empty topology: there is no entry service
  r = call(engine, "POST", "/diagnosis/run");
  CHECK(r.status == 400);
  CHECK(r.body["error"] == "entry_not_in_topology");
}

TEST_CASE("subscriptions") {
  Engine engine(AppConfig{});
  auto r = call(engine, "POST", "/subscriptions",
                R"({"method":"mse","target":{"ip":"10.0.0.3","service":"mysql"},"period_s":5})");
  CHECK(r.status == 201);
  CHECK(r.body == nlohmann::json{{"id", "sub-1"}});
  r = call(engine, "POST", "/subscriptions",
           R"({"method":"zscore","target":{"ip":"10.0.0.3","service":"mysql","metric":"cpu_util"}})");
  CHECK(r.body["id"] == "sub-2");

  CHECK(call(engine, "POST", "/subscriptions", R"({"method":"nope","target":{"ip":"a","service":"b"}})")
            .body["error"] == "unknown_method");
  CHECK(call(engine, "POST", "/subscriptions", R"({"method":"mse"})").body["error"] ==
        "missing_field");
  r = call(engine, "POST", "/subscriptions",
           R"({"method":"pc","target":{"ip":"a","service":"b"},"params":{"alpha":2}})");
  CHECK(r.status == 400);
  CHECK(r.body["error"] == "param_out_of_bounds");
  CHECK(call(engine, "POST", "/subscriptions",
             R"({"method":"mse","target":{"ip":"a","service":"b"},"period_s":0})")
            .status == 400);

  r = call(engine, "GET", "/subscriptions");
  REQUIRE(r.body["subscriptions"].size() == 2);
  CHECK(r.body["subscriptions"][0]["id"] == "sub-1");
  CHECK(r.body["subscriptions"][1]["target"]["metric"] == "cpu_util");

  // no data yet: the run records an error instead of a report
  engine.run_subscriptions_now();
  r = call(engine, "GET", "/subscriptions");
  CHECK(r.body["subscriptions"][0].contains("last_error"));

  feed(engine, hog_run());
  engine.run_subscriptions_now();
  r = call(engine, "GET", "/subscriptions");
  CHECK(r.body["subscriptions"][0]["last_report"]["method"] == "mse");
  CHECK(r.body["subscriptions"][1]["last_report"]["payload"]["anomalous"] == true);
  // the service-level mse subscription refreshes the health cache
  r = call(engine, "GET", "/health/10.0.0.3/mysql");
  CHECK(r.status == 200);
  CHECK(r.body.contains("score"));

  CHECK(call(engine, "DELETE", "/subscriptions/sub-1").status == 200);
  CHECK(call(engine, "DELETE", "/subscriptions/sub-1").status == 404);
  CHECK(call(engine, "GET", "/subscriptions").body["subscriptions"].size() == 1);
}

TEST_CASE("scheduler runs subscriptions on their period") {
  Engine engine(AppConfig{}, 10ms);
  feed(engine, hog_run());
  call(engine, "POST", "/subscriptions",
       R"({"method":"zscore","target":{"ip":"10.0.0.3","service":"mysql","metric":"cpu_util"},"period_s":1})");
  engine.start();
  nlohmann::json subs;
  for (int i = 0; i < 200; ++i) {
    std::this_thread::sleep_for(10ms);
    subs = call(engine, "GET", "/subscriptions").body["subscriptions"];
    if (subs[0].contains("last_report")) break;
  }
  engine.stop();
  CHECK(subs[0].contains("last_report"));
}

TEST_CASE("params") {
  Engine engine(AppConfig{});
  auto r = call(engine, "PUT", "/params", R"({"maintenance_cycle_s":300})");
  CHECK(r.status == 200);
  CHECK(r.body["maintenance_cycle_s"] == 300);
  r = call(engine, "PUT", "/params", R"({"maintenance_cycle_s":45,"alpha":0.05})");
  CHECK(r.body["maintenance_cycle_s"] == 45);
  CHECK(r.body["alpha"] == 0.05);
  CHECK(engine.maintenance_cycle() == 45);

  CHECK(call(engine, "PUT", "/params", R"({"maintenance_cycle_s":0})").status == 400);
  CHECK(call(engine, "PUT", "/params", R"({"maintenance_cycle_s":1.5})").status == 400);
  CHECK(call(engine, "PUT", "/params", R"({"alpha":1})").status == 400);
  CHECK(call(engine, "PUT", "/params", R"({"colour":"blue"})").status == 400);
  // rejected updates leave the values alone
  CHECK(call(engine, "GET", "/params").body["maintenance_cycle_s"] == 45);
}

TEST_CASE("diagnosis and maintenance through the engine") {
  Engine engine(AppConfig{});
  feed(engine, hog_run());

  auto r = call(engine, "POST", "/diagnosis/run", R"({"entry":"10.0.0.1:apache"})");
  REQUIRE(r.status == 200);
  REQUIRE_FALSE(r.body["ranked_causes"].empty());
  CHECK(r.body["ranked_causes"][0]["service"] == "mysql");
  CHECK(r.body["ranked_causes"][0]["metric"] == "cpu_util");
  CHECK(call(engine, "GET", "/diagnosis/latest").body == r.body);
  CHECK(call(engine, "GET", "/health/10.0.0.3/mysql").status == 200);

  CHECK(call(engine, "POST", "/diagnosis/run", R"({"entry":"10.9.9.9:ghost"})").status == 400);
  CHECK(call(engine, "POST", "/diagnosis/run", R"({"entry":42})").status == 400);

  // a high threshold keeps the loop quiet, a tiny one forces an action
  call(engine, "PUT", "/params", R"({"alarm_threshold":1000})");
  CHECK_FALSE(engine.maintenance_tick().has_value());
  CHECK(engine.emitted_actions().empty());
  call(engine, "PUT", "/params", R"({"alarm_threshold":1e-9})");
  const auto action = engine.maintenance_tick();
  REQUIRE(action.has_value());
  CHECK(action->target == kDb);
  CHECK(action->kind == ActionKind::kScale);
  REQUIRE(engine.emitted_actions().size() == 1);
  CHECK(parse_action_xml(engine.emitted_actions()[0]) == *action);
  CHECK(call(engine, "GET", "/actions").body["actions"].size() == 1);
  CHECK(engine.maintenance_counters().ticks == 2);
}

TEST_CASE("availability route") {
  Engine engine(AppConfig{});
  engine.set_events({{0, kDb, UpDownState::kUp},
                     {1999, kDb, UpDownState::kDown},
                     {2000, kDb, UpDownState::kUp}});
  const auto r = call(engine, "GET", "/availability/10.0.0.3/mysql");
  CHECK(r.status == 200);
  CHECK(r.body["availability"] == 0.9995);
}

TEST_CASE("http server forwards to the engine") {
  Engine engine(AppConfig{});
  HttpServer server(engine);
  server.bind("127.0.0.1", 0);
  REQUIRE(server.port() > 0);
  std::thread t([&] { server.listen(); });

  httplib::Client client("127.0.0.1", server.port());
  client.set_connection_timeout(2);
  httplib::Result res;
  for (int i = 0; i < 100 && !(res = client.Get("/methods")); ++i) std::this_thread::sleep_for(10ms);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["methods"].size() == 7);

  res = client.Post("/subscriptions",
                    R"({"method":"mse","target":{"ip":"10.0.0.3","service":"mysql"}})",
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  res = client.Put("/params", R"({"maintenance_cycle_s":300})", "application/json");
  REQUIRE(res);
  CHECK(nlohmann::json::parse(res->body)["maintenance_cycle_s"] == 300);
  res = client.Get("/health/10.0.0.3/mysql");
  REQUIRE(res);
  CHECK(res->status == 404);

  server.stop();
  t.join();

  Engine other(AppConfig{});
  HttpServer clash(other);
  try {
    clash.bind("127.0.0.1", server.port());
    // the port may have been released already; nothing more to check then
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBindFailure);
  }
}

TEST_CASE("config files") {
  const auto dir = oracle::scratch_dir("cfg");
  {
    std::ofstream f(dir / "engine.json");
    f << R"({"entropy":{"m":3,"max_scale":5},"pc":{"alpha":0.05},
             "maintenance":{"cycle_s":120},"topology":"topo.json","entry":"10.0.0.1:apache"})";
  }
  const auto cfg = load_config((dir / "engine.json").string());
  CHECK(cfg.entropy.m == 3);
  CHECK(cfg.entropy.max_scale == 5);
  CHECK(cfg.pc.alpha == 0.05);
  CHECK(cfg.maintenance_cycle_s == 120);
  CHECK(cfg.topology_path == (dir / "topo.json").lexically_normal().string());
  CHECK(cfg.entry == ServiceNode{"10.0.0.1", "apache"});

  const auto again = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));

  auto code = [](const nlohmann::json& j) {
    try {
      config_from_json(j);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  CHECK(code({{"pc", {{"alpha", 0}}}}) == ErrorCode::kInvalidConfig);
  CHECK(code({{"maintenance", {{"cycle_s", 0}}}}) == ErrorCode::kInvalidConfig);
  CHECK(code({{"align", {{"aggregation", "median"}}}}) == ErrorCode::kInvalidConfig);
  CHECK(code({{"entry", "nocolon"}}) == ErrorCode::kInvalidConfig);
  CHECK(code(nlohmann::json::array()) == ErrorCode::kInvalidConfig);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pipeline on a simulated cpu hog") {
  const auto out = hog_run(7);
  std::map<MetricKey, MetricSeries> grouped;
  for (const auto& s : out.samples) {
    auto& series = grouped[s.key()];
    series.key = s.key();
    series.points.push_back({s.ts_ms, s.value});
  }
  std::vector<MetricSeries> series;
  for (auto& [k, s] : grouped) series.push_back(std::move(s));

  const auto result = run_diagnosis(out.topology, series, {"10.0.0.1", "apache"}, AppConfig{});
  CHECK(result.diagnosis.candidate_services == std::vector<ServiceNode>{kDb});
  REQUIRE_FALSE(result.diagnosis.ranked_causes.empty());
  CHECK(result.diagnosis.ranked_causes[0].metric == "cpu_util");
  CHECK(result.health.size() == 3);
  CHECK(result.graphs.count(kDb) == 1);

  CHECK_THROWS_AS(run_diagnosis(out.topology, series, {"1.2.3.4", "x"}, AppConfig{}), Error);
}

TEST_CASE("command line") {
  const auto dir = oracle::scratch_dir("cli");

  SUBCASE("entropy of a constant column") {
    {
      std::ofstream f(dir / "flat.csv");
      f << "value\n";
      for (int i = 0; i < 300; ++i) f << "5\n";
    }
    const auto r = cli({"--format", "json", "entropy", "--input", (dir / "flat.csv").string()});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["curve"].size() == 10);
    for (const auto& v : j["curve"]) CHECK(v == 0.0);
  }

  SUBCASE("unknown method") {
    {
      std::ofstream f(dir / "x.csv");
      f << "1\n2\n";
    }
    const auto r = cli({"analyze", "--method", "nope", "--input", (dir / "x.csv").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown method") != std::string::npos);
  }

  SUBCASE("usage errors") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"entropy"}).code == 2);
    CHECK(cli({"--help"}).code == 0);
  }

  SUBCASE("methods") {
    const auto r = cli({"methods"});
    CHECK(r.code == 0);
    CHECK(r.out.find("pc (metric_matrix)") != std::string::npos);
  }

  SUBCASE("simulate then diagnose") {
    const auto sim = (dir / "sim").string();
    auto r = cli({"simulate", "--seed", "3", "--duration", "400", "--out", sim, "--fault",
                  "cpu_hog,10.0.0.3:mysql,cpu_util,370,400,8"});
    REQUIRE(r.code == 0);
    r = cli({"--format", "json", "diagnose", "--topology", sim + "/topology.json", "--metrics", sim,
             "--entry", "10.0.0.1:apache"});
    REQUIRE(r.code == 0);
    const auto d = nlohmann::json::parse(r.out);
    CHECK(d["ranked_causes"][0]["service"] == "mysql");
    CHECK(d["ranked_causes"][0]["metric"] == "cpu_util");

    // an outage that ends inside the run gives a completed repair interval
    const auto sim2 = (dir / "sim2").string();
    r = cli({"simulate", "--seed", "3", "--duration", "400", "--out", sim2, "--fault",
             "cpu_hog,10.0.0.3:mysql,cpu_util,100,200,8"});
    REQUIRE(r.code == 0);
    r = cli({"availability", "--events", sim2 + "/events.ndjson", "--target", "10.0.0.3:mysql"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("10.0.0.3:mysql mttf_ms=", 0) == 0);
  }

  SUBCASE("forecast and pc") {
    {
      std::ofstream f(dir / "h.csv");
      f << "ts_ms,score\n0,0.1\n1,0.2\n2,0.3\n";
    }
    auto r = cli({"forecast", "--input", (dir / "h.csv").string(), "--theta", "0.6"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("crossing at ", 0) == 0);

    {
      std::ofstream f(dir / "m.csv");
      f << "a,b,c\n";
      for (int i = 0; i < 5; ++i) f << i << "," << i << "," << i << "\n";
    }
    r = cli({"pc", "--input", (dir / "m.csv").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") == 0);
  }
  std::filesystem::remove_all(dir);
}
