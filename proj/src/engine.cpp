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

#include "availscope/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>

#include "availscope/error.hpp"

namespace availscope {

namespace {

TimestampMs wall_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

ApiResponse error_response(int status, std::string_view code, const std::string& message = {}) {
  nlohmann::json body = {{"error", std::string(code)}};
  if (!message.empty()) body["message"] = message;
  return {status, std::move(body)};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kUnknownMethod:
    case ErrorCode::kParamOutOfBounds:
    case ErrorCode::kInputKindMismatch:
    case ErrorCode::kEntryNotInTopology:
    case ErrorCode::kMalformedRecord:
    case ErrorCode::kMissingField:
    case ErrorCode::kNonFiniteValue:
      return 400;
    default:
      return 422;
  }
}

nlohmann::json target_to_json(const SubscriptionTarget& t) {
  if (const auto* key = std::get_if<MetricKey>(&t)) {
    return {{"ip", key->ip}, {"service", key->service}, {"metric", key->metric}};
  }
  const auto& node = std::get<ServiceNode>(t);
  return {{"ip", node.ip}, {"service", node.service}};
}

ServiceNode node_of(const SubscriptionTarget& t) {
  if (const auto* key = std::get_if<MetricKey>(&t)) return key->node();
  return std::get<ServiceNode>(t);
}

std::optional<ServiceNode> parse_entry(const nlohmann::json& v) {
  if (v.is_string()) return parse_service_node(v.get<std::string>());
  if (v.is_object() && v.contains("ip") && v.contains("service") && v.at("ip").is_string() &&
      v.at("service").is_string()) {
    return ServiceNode{v.at("ip").get<std::string>(), v.at("service").get<std::string>()};
  }
  return std::nullopt;
}

MetricSeries trailing(MetricSeries s, std::size_t n) {
  if (s.points.size() > n) {
    s.points.erase(s.points.begin(), s.points.end() - static_cast<std::ptrdiff_t>(n));
  }
  return s;
}

}  // namespace

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) parts.push_back(cur);
    cur.clear();
  };
  const auto end = path.find('?');
  const std::string_view p(path.data(), end == std::string::npos ? path.size() : end);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const char c = p[i];
    if (c == '/') {
      flush();
    } else if (c == '%' && i + 2 < p.size() && std::isxdigit(static_cast<unsigned char>(p[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(p[i + 2]))) {
      cur += static_cast<char>(std::stoi(std::string(p.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      cur += c;
    }
  }
  flush();
  return parts;
}

Engine::Engine(AppConfig cfg, std::chrono::milliseconds time_unit)
    : cfg_(std::move(cfg)), store_(cfg_.ingest), unit_(time_unit) {
  cfg_.validate();
  if (!cfg_.topology_path.empty()) topology_ = load_topology_file(cfg_.topology_path);
  if (!cfg_.events_path.empty() && std::filesystem::exists(cfg_.events_path)) {
    events_ = load_event_log(cfg_.events_path);
  }
  MaintenancePipeline pipeline{[this] { return evaluate_health(); },
                               [this] { return diagnose_now(std::nullopt); }};
  ActionEmitter emitter = [this](const std::string& xml, const MaintenanceAction&) {
    std::lock_guard lock(cache_mu_);
    actions_.push_back(xml);
  };
  loop_ = std::make_unique<MaintenanceLoop>(cfg_.policy, std::move(pipeline), std::move(emitter),
                                            cfg_.maintenance_cycle_s, unit_);
}

Engine::~Engine() { stop(); }

void Engine::set_topology(ServiceDependencyGraph topology) {
  const auto problems = validate_topology(topology);
  if (!problems.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid topology: " + problems.front().detail);
  }
  std::unique_lock lock(cfg_mu_);
  topology_ = std::move(topology);
}

ServiceDependencyGraph Engine::topology() const {
  std::shared_lock lock(cfg_mu_);
  return topology_;
}

void Engine::set_events(std::vector<UpDownEvent> events) {
  std::unique_lock lock(cfg_mu_);
  events_ = std::move(events);
}

AppConfig Engine::config_copy() const {
  std::shared_lock lock(cfg_mu_);
  return cfg_;
}

void Engine::start() {
  {
    std::lock_guard lock(sub_mu_);
    if (sched_running_) return;
    sched_running_ = true;
  }
  scheduler_ = std::thread([this] { scheduler_loop(); });
  loop_->start();
}

void Engine::stop() {
  {
    std::lock_guard lock(sub_mu_);
    sched_running_ = false;
  }
  sub_cv_.notify_all();
  if (scheduler_.joinable()) scheduler_.join();
  if (loop_) loop_->stop();
}

std::optional<MaintenanceAction> Engine::maintenance_tick() { return loop_->tick(); }
CycleCounters Engine::maintenance_counters() const { return loop_->counters(); }
int Engine::maintenance_cycle() const { return loop_->cycle(); }

std::vector<std::string> Engine::emitted_actions() const {
  std::lock_guard lock(cache_mu_);
  return actions_;
}

bool Engine::evaluate_health() {
  const auto cfg = config_copy();
  const auto topo = topology();
  const auto states = observe_services(topo, store_.snapshot_all(), cfg, wall_ms());
  bool alarm = false;
  std::lock_guard lock(cache_mu_);
  for (const auto& [node, state] : states) {
    if (!state.observation.health) continue;
    health_[node] = *state.observation.health;
    alarm = alarm || health_alarm(*state.observation.health, cfg.entropy.alarm_threshold);
  }
  return alarm;
}

Diagnosis Engine::diagnose_now(const std::optional<ServiceNode>& requested) {
  const auto cfg = config_copy();
  const auto topo = topology();
  std::optional<ServiceNode> entry = requested;
  if (!entry) entry = cfg.entry;
  if (!entry && !topo.nodes.empty()) entry = topo.nodes.front();
  if (!entry) throw Error(ErrorCode::kEntryNotInTopology, "topology is empty");
  auto result = run_diagnosis(topo, store_.snapshot_all(), *entry, cfg, wall_ms());
  std::lock_guard lock(cache_mu_);
  for (const auto& [node, report] : result.health) health_[node] = report;
  latest_diagnosis_ = result.diagnosis;
  return result.diagnosis;
}

void Engine::run_subscription(Subscription& sub) {
  const auto desc = bus_.find(sub.method);
  if (!desc) throw Error(ErrorCode::kUnknownMethod, "unknown method " + sub.method);
  const auto cfg = config_copy();
  const auto now = wall_ms();
  const auto node = node_of(sub.target);
  const auto target_text = std::holds_alternative<MetricKey>(sub.target)
                               ? to_string(node) + ":" + std::get<MetricKey>(sub.target).metric
                               : to_string(node);

  switch (desc->input_kind) {
    case InputKind::kSingleSeries: {
      std::vector<MetricSeries> series;
      if (const auto* key = std::get_if<MetricKey>(&sub.target)) {
        auto s = store_.snapshot(*key);
        if (!s) throw Error(ErrorCode::kEmptyInput, "no data for " + target_text);
        series.push_back(std::move(*s));
      } else {
        series = store_.snapshot_service(node);
        if (series.empty()) throw Error(ErrorCode::kEmptyInput, "no data for " + target_text);
      }
      if (sub.method == "mse" && std::holds_alternative<ServiceNode>(sub.target)) {
        // Service-level entropy health; cached for GET /health.
        const auto pv = resolve_params(*desc, sub.params);
        auto ecfg = cfg.entropy;
        ecfg.m = pv.integer("m");
        ecfg.r_fraction = pv.real("r_fraction");
        ecfg.max_scale = pv.integer("max_scale");
        std::map<std::string, std::vector<double>> windows;
        for (const auto& s : series) {
          windows[s.key.metric] = trailing(s, ecfg.window_len).values();
        }
        auto report = health_score(windows, ecfg, node, now);
        {
          std::lock_guard lock(cache_mu_);
          health_[node] = report;
        }
        sub.last_report = AnalysisReport{sub.method, target_text, now, report, {}};
        return;
      }
      if (series.size() == 1) {
        auto s = sub.method == "mse" ? trailing(series.front(), cfg.entropy.window_len)
                                     : series.front();
        sub.last_report = bus_.run_method(sub.method, s, sub.params, target_text, now);
        return;
      }
      AnalysisReport combined{sub.method, target_text, now, nlohmann::json::object(), {}};
      for (const auto& s : series) {
        try {
          auto input = sub.method == "mse" ? trailing(s, cfg.entropy.window_len) : s;
          auto r = bus_.run_method(sub.method, input, sub.params, target_text, now);
          combined.payload[s.key.metric] = std::move(r.payload);
          for (auto& w : r.warnings) combined.warnings.push_back(s.key.metric + ": " + w);
        } catch (const Error& e) {
          combined.warnings.push_back(s.key.metric + ": " + e.what());
        }
      }
      sub.last_report = std::move(combined);
      return;
    }
    case InputKind::kMetricMatrix: {
      const auto series = store_.snapshot_service(node);
      if (series.empty()) throw Error(ErrorCode::kEmptyInput, "no data for " + target_text);
      sub.last_report = bus_.run_method(sub.method, align(series, cfg.interval_ms, cfg.aggregation),
                                        sub.params, target_text, now);
      return;
    }
    case InputKind::kEventLog: {
      std::vector<UpDownEvent> log;
      {
        std::shared_lock lock(cfg_mu_);
        for (const auto& e : events_) {
          if (e.target == node) log.push_back(e);
        }
      }
      sub.last_report = bus_.run_method(sub.method, log, sub.params, target_text, now);
      return;
    }
    case InputKind::kSnapshot: {
      SnapshotInput snap;
      snap.topology = topology();
      for (auto& [n, state] : observe_services(snap.topology, store_.snapshot_all(), cfg, now)) {
        snap.observations.emplace(n, std::move(state.observation));
      }
      sub.last_report = bus_.run_method(sub.method, snap, sub.params, target_text, now);
      return;
    }
  }
}

void Engine::run_subscriptions_now() {
  std::vector<Subscription> work;
  {
    std::lock_guard lock(sub_mu_);
    for (const auto& [id, st] : subs_) work.push_back(st.sub);
  }
  for (auto& sub : work) {
    try {
      run_subscription(sub);
      sub.last_error.clear();
    } catch (const std::exception& e) {
      sub.last_error = e.what();
    }
    std::lock_guard lock(sub_mu_);
    const auto it = subs_.find(sub.id);
    if (it != subs_.end()) {
      it->second.sub.last_report = sub.last_report;
      it->second.sub.last_error = sub.last_error;
    }
  }
}

void Engine::scheduler_loop() {
  using clock = std::chrono::steady_clock;
  std::unique_lock lock(sub_mu_);
  while (sched_running_) {
    auto wake = clock::now() + unit_;
    for (const auto& [id, st] : subs_) wake = std::min(wake, st.next_due);
    sub_cv_.wait_until(lock, wake);
    if (!sched_running_) return;
    const auto now = clock::now();
    std::vector<Subscription> due;
    for (auto& [id, st] : subs_) {
      if (st.next_due > now) continue;
      due.push_back(st.sub);
      st.next_due += unit_ * st.sub.period_s;
      if (st.next_due <= now) st.next_due = now + unit_ * st.sub.period_s;
    }
    if (due.empty()) continue;
    lock.unlock();
    for (auto& sub : due) {
      try {
        run_subscription(sub);
        sub.last_error.clear();
      } catch (const std::exception& e) {
        sub.last_error = e.what();
      }
    }
    lock.lock();
    for (auto& sub : due) {
      const auto it = subs_.find(sub.id);
      if (it == subs_.end()) continue;
      it->second.sub.last_report = std::move(sub.last_report);
      it->second.sub.last_error = std::move(sub.last_error);
    }
  }
}

ApiResponse Engine::handle(const ApiRequest& request) {
  const auto parts = split_path(request.path);
  const auto& m = request.method;
  auto body = [&]() -> nlohmann::json {
    if (request.body.empty()) return nlohmann::json::object();
    return nlohmann::json::parse(request.body);
  };
  try {
    if (parts.size() == 1 && parts[0] == "subscriptions") {
      if (m == "POST") return post_subscription(body());
      if (m == "GET") return list_subscriptions();
    } else if (parts.size() == 2 && parts[0] == "subscriptions" && m == "DELETE") {
      return delete_subscription(parts[1]);
    } else if (parts.size() == 1 && parts[0] == "methods" && m == "GET") {
      return list_methods();
    } else if (parts.size() == 3 && parts[0] == "health" && m == "GET") {
      return get_health({parts[1], parts[2]});
    } else if (parts.size() == 2 && parts[0] == "diagnosis") {
      if (parts[1] == "latest" && m == "GET") return get_latest_diagnosis();
      if (parts[1] == "run" && m == "POST") return run_diagnosis_route(body());
    } else if (parts.size() == 3 && parts[0] == "availability" && m == "GET") {
      return get_availability({parts[1], parts[2]});
    } else if (parts.size() == 1 && parts[0] == "params") {
      if (m == "PUT") return put_params(body());
      if (m == "GET") return get_params();
    } else if (parts.size() == 1 && parts[0] == "actions" && m == "GET") {
      return get_actions();
    }
    return error_response(404, "not_found", m + " " + request.path);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "malformed_body", e.what());
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

ApiResponse Engine::post_subscription(const nlohmann::json& body) {
  if (!body.is_object()) return error_response(400, "invalid_argument", "body must be an object");
  if (!body.contains("method") || !body.at("method").is_string()) {
    return error_response(400, "missing_field", "method");
  }
  const auto method = body.at("method").get<std::string>();
  const auto desc = bus_.find(method);
  if (!desc) return error_response(400, "unknown_method", "unknown method " + method);

  if (!body.contains("target") || !body.at("target").is_object()) {
    return error_response(400, "missing_field", "target");
  }
  const auto& t = body.at("target");
  const auto node = parse_entry(t);
  if (!node) return error_response(400, "invalid_argument", "target needs ip and service");
  SubscriptionTarget target = *node;
  if (t.contains("metric")) {
    if (!t.at("metric").is_string()) {
      return error_response(400, "invalid_argument", "target.metric must be a string");
    }
    target = MetricKey{node->ip, node->service, t.at("metric").get<std::string>()};
  }

  int period = 60;
  if (body.contains("period_s")) {
    const auto& p = body.at("period_s");
    if (!p.is_number_integer() || p.get<long long>() < 1 || p.get<long long>() > 86400 * 365) {
      return error_response(400, "invalid_argument", "period_s must be an integer >= 1");
    }
    period = static_cast<int>(p.get<long long>());
  }
  auto params = body.value("params", nlohmann::json::object());
  resolve_params(*desc, params);  // reject bad params up front

  std::lock_guard lock(sub_mu_);
  Subscription sub;
  sub.id = "sub-" + std::to_string(next_sub_++);
  sub.method = method;
  sub.target = std::move(target);
  sub.params = std::move(params);
  sub.period_s = period;
  sub.created_at_ms = wall_ms();
  const auto id = sub.id;
  subs_.emplace(id, SubState{std::move(sub), std::chrono::steady_clock::now()});
  sub_cv_.notify_all();
  return {201, {{"id", id}}};
}

ApiResponse Engine::delete_subscription(const std::string& id) {
  std::lock_guard lock(sub_mu_);
  if (subs_.erase(id) == 0) return error_response(404, "unknown_subscription", id);
  sub_cv_.notify_all();
  return {200, {{"deleted", id}}};
}

ApiResponse Engine::list_subscriptions() {
  std::lock_guard lock(sub_mu_);
  std::vector<const Subscription*> ordered;
  for (const auto& [id, st] : subs_) ordered.push_back(&st.sub);
  // numeric id order
  std::sort(ordered.begin(), ordered.end(), [](const Subscription* a, const Subscription* b) {
    return std::stoull(a->id.substr(4)) < std::stoull(b->id.substr(4));
  });
  auto arr = nlohmann::json::array();
  for (const auto* s : ordered) arr.push_back(*s);
  return {200, {{"subscriptions", std::move(arr)}}};
}

ApiResponse Engine::list_methods() {
  return {200, {{"methods", bus_.list_methods()}}};
}

ApiResponse Engine::get_health(const ServiceNode& node) {
  std::lock_guard lock(cache_mu_);
  const auto it = health_.find(node);
  if (it == health_.end()) return {404, {{"error", "no_report"}}};
  return {200, it->second};
}

ApiResponse Engine::get_latest_diagnosis() {
  std::lock_guard lock(cache_mu_);
  if (!latest_diagnosis_) return {404, {{"error", "no_diagnosis"}}};
  return {200, *latest_diagnosis_};
}

ApiResponse Engine::run_diagnosis_route(const nlohmann::json& body) {
  std::optional<ServiceNode> entry;
  if (body.is_object() && body.contains("entry")) {
    entry = parse_entry(body.at("entry"));
    if (!entry) return error_response(400, "invalid_argument", "entry must be ip:service");
  }
  return {200, diagnose_now(entry)};
}

ApiResponse Engine::get_availability(const ServiceNode& node) {
  std::vector<UpDownEvent> log;
  {
    std::shared_lock lock(cfg_mu_);
    for (const auto& e : events_) {
      if (e.target == node) log.push_back(e);
    }
  }
  if (log.empty()) return {404, {{"error", "no_events"}}};
  return {200, availability(log)};
}

ApiResponse Engine::put_params(const nlohmann::json& body) {
  if (!body.is_object()) return error_response(400, "invalid_argument", "body must be an object");
  std::optional<int> cycle;
  std::optional<double> threshold;
  std::optional<double> alpha;
  for (const auto& [key, v] : body.items()) {
    if (key == "maintenance_cycle_s") {
      if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 86400 * 365) {
        return error_response(400, "param_out_of_bounds", "maintenance_cycle_s must be >= 1");
      }
      cycle = static_cast<int>(v.get<long long>());
    } else if (key == "alarm_threshold") {
      if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>())) {
        return error_response(400, "param_out_of_bounds", "alarm_threshold must be > 0");
      }
      threshold = v.get<double>();
    } else if (key == "alpha") {
      if (!v.is_number() || !(v.get<double>() > 0.0 && v.get<double>() < 1.0)) {
        return error_response(400, "param_out_of_bounds", "alpha must be in (0,1)");
      }
      alpha = v.get<double>();
    } else {
      return error_response(400, "invalid_argument", "unknown parameter " + key);
    }
  }
  {
    std::unique_lock lock(cfg_mu_);
    if (cycle) {
      cfg_.maintenance_cycle_s = *cycle;
      loop_->set_cycle(*cycle);
    }
    if (threshold) cfg_.entropy.alarm_threshold = *threshold;
    if (alpha) cfg_.pc.alpha = *alpha;
  }
  return get_params();
}

ApiResponse Engine::get_params() {
  std::shared_lock lock(cfg_mu_);
  return {200,
          {{"maintenance_cycle_s", cfg_.maintenance_cycle_s},
           {"alarm_threshold", cfg_.entropy.alarm_threshold},
           {"alpha", cfg_.pc.alpha}}};
}

ApiResponse Engine::get_actions() {
  std::lock_guard lock(cache_mu_);
  return {200, {{"actions", actions_}}};
}

void to_json(nlohmann::json& j, const Subscription& s) {
  j = {{"id", s.id},
       {"method", s.method},
       {"target", target_to_json(s.target)},
       {"params", s.params},
       {"period_s", s.period_s},
       {"created_at_ms", s.created_at_ms}};
  if (s.last_report) j["last_report"] = *s.last_report;
  if (!s.last_error.empty()) j["last_error"] = s.last_error;
}

}  // namespace availscope
