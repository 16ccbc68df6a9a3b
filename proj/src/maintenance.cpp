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

#include "availscope/maintenance.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <regex>

#include "availscope/error.hpp"

namespace availscope {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kRestart: return "restart";
    case ActionKind::kReconfigure: return "reconfigure";
    case ActionKind::kMigrate: return "migrate";
    case ActionKind::kScale: return "scale";
  }
  return "restart";
}

std::optional<ActionKind> parse_action_kind(std::string_view text) {
  for (auto k : {ActionKind::kRestart, ActionKind::kReconfigure, ActionKind::kMigrate,
                 ActionKind::kScale}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(CauseCategory category) {
  switch (category) {
    case CauseCategory::kCpu: return "cpu";
    case CauseCategory::kMemory: return "memory";
    case CauseCategory::kIo: return "io";
    case CauseCategory::kConfig: return "config";
    case CauseCategory::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<CauseCategory> parse_cause_category(std::string_view text) {
  for (auto c : {CauseCategory::kCpu, CauseCategory::kMemory, CauseCategory::kIo,
                 CauseCategory::kConfig, CauseCategory::kUnknown}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

void MaintenancePolicy::validate() const {
  for (auto c : {CauseCategory::kCpu, CauseCategory::kMemory, CauseCategory::kIo,
                 CauseCategory::kConfig, CauseCategory::kUnknown}) {
    const auto it = applicability.find(c);
    if (it == applicability.end() || it->second.empty()) {
      throw Error(ErrorCode::kInvalidConfig,
                  "category " + std::string(to_string(c)) + " has no applicable action");
    }
    for (auto k : it->second) {
      const auto cost = costs.find(k);
      if (cost == costs.end() || !(cost->second > 0.0)) {
        throw Error(ErrorCode::kInvalidConfig,
                    "action " + std::string(to_string(k)) + " needs a positive cost");
      }
    }
  }
  if (applicability.at(CauseCategory::kUnknown) != std::set<ActionKind>{ActionKind::kRestart}) {
    throw Error(ErrorCode::kInvalidConfig, "category unknown must map to {restart}");
  }
  for (const auto& [pattern, category] : cause_category_rules) {
    try {
      std::regex re(pattern);
    } catch (const std::regex_error&) {
      throw Error(ErrorCode::kInvalidConfig, "bad cause pattern " + pattern);
    }
  }
}

CauseCategory MaintenancePolicy::categorize(const std::string& metric) const {
  for (const auto& [pattern, category] : cause_category_rules) {
    if (std::regex_search(metric, std::regex(pattern))) return category;
  }
  return CauseCategory::kUnknown;
}

MaintenancePolicy MaintenancePolicy::defaults() {
  MaintenancePolicy p;
  p.costs = {{ActionKind::kRestart, 3.0},
             {ActionKind::kReconfigure, 2.0},
             {ActionKind::kMigrate, 10.0},
             {ActionKind::kScale, 8.0}};
  p.applicability = {
      {CauseCategory::kCpu, {ActionKind::kMigrate, ActionKind::kScale}},
      {CauseCategory::kMemory, {ActionKind::kRestart, ActionKind::kMigrate}},
      {CauseCategory::kIo, {ActionKind::kMigrate, ActionKind::kScale}},
      {CauseCategory::kConfig, {ActionKind::kReconfigure, ActionKind::kRestart}},
      {CauseCategory::kUnknown, {ActionKind::kRestart}},
  };
  p.cause_category_rules = {
      {"^cpu", CauseCategory::kCpu},
      {"^mem", CauseCategory::kMemory},
      {"^(io|disk)", CauseCategory::kIo},
      {"conn|config|error", CauseCategory::kConfig},
  };
  return p;
}

std::optional<MaintenanceAction> decide_action(const Diagnosis& diag,
                                               const MaintenancePolicy& policy,
                                               const ActionContext& ctx) {
  if (diag.ranked_causes.empty()) return std::nullopt;
  const auto& top = diag.ranked_causes.front();
  const auto category = policy.categorize(top.metric);
  const auto& applicable = policy.applicability.at(category);

  // std::set iterates in declaration order, so strict < keeps the earliest kind on ties
  std::optional<ActionKind> best;
  double best_cost = 0.0;
  for (auto kind : applicable) {
    const double cost = policy.costs.at(kind);
    if (!best || cost < best_cost) {
      best = kind;
      best_cost = cost;
    }
  }
  MaintenanceAction a;
  a.id = ctx.id;
  a.issued_at_ms = ctx.issued_at_ms;
  a.target = top.node;
  a.kind = *best;
  a.reason_metric = top.metric;
  a.reason_score = top.score;
  a.cycle_s = ctx.cycle_s;
  return a;
}

namespace {

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::kMalformedXml, "malformed maintenance message: " + why);
}

struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;
  std::vector<XmlElement> children;

  const std::string* attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

// Just enough XML for the maintenance message: elements, attributes, text,
// the five predefined entities, comments and an optional declaration.
class XmlReader {
 public:
  explicit XmlReader(std::string_view doc) : doc_(doc) {}

  XmlElement parse_document() {
    skip_misc();
    if (starts_with("<?xml")) {
      const auto end = doc_.find("?>", pos_);
      if (end == std::string_view::npos) malformed("unterminated declaration");
      pos_ = end + 2;
    }
    skip_misc();
    auto root = parse_element();
    skip_misc();
    if (pos_ != doc_.size()) malformed("content after root element");
    return root;
  }

 private:
  bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

  void skip_ws() {
    while (pos_ < doc_.size() && std::isspace(static_cast<unsigned char>(doc_[pos_]))) ++pos_;
  }

  void skip_misc() {
    while (true) {
      skip_ws();
      if (!starts_with("<!--")) return;
      const auto end = doc_.find("-->", pos_);
      if (end == std::string_view::npos) malformed("unterminated comment");
      pos_ = end + 3;
    }
  }

  std::string parse_name() {
    const auto start = pos_;
    while (pos_ < doc_.size()) {
      const char c = doc_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
          c == ':') {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ == start) malformed("expected a name at offset " + std::to_string(start));
    return std::string(doc_.substr(start, pos_ - start));
  }

  std::string decode(std::string_view raw) {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        if (raw[i] == '<') malformed("stray '<'");
        out += raw[i];
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) malformed("unterminated entity");
      const auto ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else malformed("unknown entity &" + std::string(ent) + ";");
      i = semi;
    }
    return out;
  }

  XmlElement parse_element() {
    if (pos_ >= doc_.size() || doc_[pos_] != '<') malformed("expected '<'");
    ++pos_;
    XmlElement el;
    el.name = parse_name();
    while (true) {
      skip_ws();
      if (pos_ >= doc_.size()) malformed("unterminated tag <" + el.name + ">");
      if (starts_with("/>")) {
        pos_ += 2;
        return el;
      }
      if (doc_[pos_] == '>') {
        ++pos_;
        break;
      }
      auto key = parse_name();
      skip_ws();
      if (pos_ >= doc_.size() || doc_[pos_] != '=') malformed("expected '=' after " + key);
      ++pos_;
      skip_ws();
      if (pos_ >= doc_.size() || (doc_[pos_] != '"' && doc_[pos_] != '\'')) {
        malformed("attribute value must be quoted");
      }
      const char quote = doc_[pos_++];
      const auto end = doc_.find(quote, pos_);
      if (end == std::string_view::npos) malformed("unterminated attribute value");
      el.attributes.emplace_back(std::move(key), decode(doc_.substr(pos_, end - pos_)));
      pos_ = end + 1;
    }
    // content
    std::string raw_text;
    while (true) {
      if (pos_ >= doc_.size()) malformed("missing </" + el.name + ">");
      if (starts_with("<!--")) {
        skip_misc();
        continue;
      }
      if (starts_with("</")) {
        pos_ += 2;
        const auto closing = parse_name();
        if (closing != el.name) malformed("</" + closing + "> closes <" + el.name + ">");
        skip_ws();
        if (pos_ >= doc_.size() || doc_[pos_] != '>') malformed("bad closing tag");
        ++pos_;
        break;
      }
      if (doc_[pos_] == '<') {
        el.children.push_back(parse_element());
        continue;
      }
      const auto next = doc_.find('<', pos_);
      if (next == std::string_view::npos) malformed("missing </" + el.name + ">");
      raw_text.append(doc_.substr(pos_, next - pos_));
      pos_ = next;
    }
    el.text = decode(raw_text);
    return el;
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const char* what) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    malformed(std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

}  // namespace

std::string serialize_action_xml(const MaintenanceAction& action) {
  std::string out;
  out += "<maintenance_action>\n";
  out += "  <id>" + xml_escape(action.id) + "</id>\n";
  out += "  <issued_at>" + std::to_string(action.issued_at_ms) + "</issued_at>\n";
  out += "  <target ip=\"" + xml_escape(action.target.ip) + "\" service=\"" +
         xml_escape(action.target.service) + "\"/>\n";
  out += "  <action>" + std::string(to_string(action.kind)) + "</action>\n";
  out += "  <reason metric=\"" + xml_escape(action.reason_metric) + "\" score=\"" +
         format_double(action.reason_score) + "\"/>\n";
  out += "  <cycle_s>" + std::to_string(action.cycle_s) + "</cycle_s>\n";
  out += "</maintenance_action>\n";
  return out;
}

MaintenanceAction parse_action_xml(std::string_view doc) {
  const auto root = XmlReader(doc).parse_document();
  if (root.name != "maintenance_action") malformed("root element is <" + root.name + ">");
  if (!root.attributes.empty()) malformed("unexpected attributes on root");

  std::map<std::string, const XmlElement*> fields;
  for (const auto& child : root.children) {
    static const std::set<std::string> kKnown{"id", "issued_at", "target", "action", "reason",
                                              "cycle_s"};
    if (!kKnown.count(child.name)) malformed("unknown element <" + child.name + ">");
    if (!fields.emplace(child.name, &child).second) malformed("repeated <" + child.name + ">");
  }
  auto need = [&](const char* name) -> const XmlElement& {
    const auto it = fields.find(name);
    if (it == fields.end()) {
      throw Error(ErrorCode::kMissingElement, std::string("missing <") + name + ">");
    }
    return *it->second;
  };
  auto need_attr = [](const XmlElement& el, const char* key) -> const std::string& {
    const auto* v = el.attribute(key);
    if (!v) {
      throw Error(ErrorCode::kMissingElement,
                  "missing attribute " + std::string(key) + " on <" + el.name + ">");
    }
    return *v;
  };

  MaintenanceAction a;
  a.id = need("id").text;
  a.issued_at_ms = parse_number<TimestampMs>(trim(need("issued_at").text), "issued_at");
  const auto& target = need("target");
  a.target.ip = need_attr(target, "ip");
  a.target.service = need_attr(target, "service");
  const auto action_text = trim(need("action").text);
  const auto kind = parse_action_kind(action_text);
  if (!kind) throw Error(ErrorCode::kUnknownAction, "unknown action '" + action_text + "'");
  a.kind = *kind;
  const auto& reason = need("reason");
  a.reason_metric = need_attr(reason, "metric");
  a.reason_score = parse_number<double>(need_attr(reason, "score"), "score");
  a.cycle_s = parse_number<int>(trim(need("cycle_s").text), "cycle_s");
  return a;
}

MaintenanceLoop::MaintenanceLoop(MaintenancePolicy policy, MaintenancePipeline pipeline,
                                 ActionEmitter emitter, int cycle_s,
                                 std::chrono::milliseconds unit)
    : policy_(std::move(policy)),
      pipeline_(std::move(pipeline)),
      emitter_(std::move(emitter)),
      cycle_s_(cycle_s),
      unit_(unit) {
  if (cycle_s < 1) throw Error(ErrorCode::kInvalidArgument, "cycle_s must be >= 1");
  policy_.validate();
}

MaintenanceLoop::~MaintenanceLoop() { stop(); }

void MaintenanceLoop::set_cycle(int cycle_s) {
  if (cycle_s < 1) throw Error(ErrorCode::kInvalidArgument, "cycle_s must be >= 1");
  cycle_s_.store(cycle_s);
}

std::optional<MaintenanceAction> MaintenanceLoop::tick() {
  std::unique_lock eval(eval_mu_, std::try_to_lock);
  if (!eval.owns_lock()) {
    skipped_.fetch_add(1);
    return std::nullopt;
  }
  ticks_.fetch_add(1);
  try {
    if (!pipeline_.health_alarm || !pipeline_.health_alarm()) return std::nullopt;
    alarms_.fetch_add(1);
    const auto diag = pipeline_.diagnose();
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    ActionContext ctx{"act-" + std::to_string(next_id_), now, cycle_s_.load()};
    auto action = decide_action(diag, policy_, ctx);
    if (!action) return std::nullopt;
    ++next_id_;
    if (emitter_) emitter_(serialize_action_xml(*action), *action);
    actions_.fetch_add(1);
    return action;
  } catch (const std::exception& e) {
    failures_.fetch_add(1);
    std::fprintf(stderr, "maintenance cycle: evaluation failed: %s\n", e.what());
    return std::nullopt;
  }
}

void MaintenanceLoop::start() {
  std::lock_guard lock(mu_);
  if (running_) return;
  running_ = true;
  worker_ = std::thread([this] { run(); });
}

void MaintenanceLoop::stop() {
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void MaintenanceLoop::run() {
  using clock = std::chrono::steady_clock;
  auto next = clock::now() + unit_ * cycle_s_.load();
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait_until(lock, next, [this] { return !running_; });
    if (!running_) return;
    lock.unlock();
    tick();
    lock.lock();
    const auto period = unit_ * cycle_s_.load();
    next += period;
    const auto now = clock::now();
    while (next <= now) {
      next += period;
      skipped_.fetch_add(1);
    }
  }
}

CycleCounters MaintenanceLoop::counters() const {
  return {ticks_.load(), alarms_.load(), actions_.load(), skipped_.load(), failures_.load()};
}

void run_cycle(int cycle_s, MaintenancePipeline pipeline, ActionEmitter emitter,
               MaintenancePolicy policy) {
  MaintenanceLoop loop(std::move(policy), std::move(pipeline), std::move(emitter), cycle_s);
  loop.start();
  while (true) std::this_thread::sleep_for(std::chrono::hours(24));
}

void to_json(nlohmann::json& j, const MaintenancePolicy& p) {
  j = nlohmann::json::object();
  auto costs = nlohmann::json::object();
  for (const auto& [k, c] : p.costs) costs[std::string(to_string(k))] = c;
  auto applicable = nlohmann::json::object();
  for (const auto& [cat, kinds] : p.applicability) {
    auto arr = nlohmann::json::array();
    for (auto k : kinds) arr.push_back(std::string(to_string(k)));
    applicable[std::string(to_string(cat))] = std::move(arr);
  }
  auto rules = nlohmann::json::array();
  for (const auto& [pattern, cat] : p.cause_category_rules) {
    rules.push_back({pattern, std::string(to_string(cat))});
  }
  j["costs"] = std::move(costs);
  j["applicability"] = std::move(applicable);
  j["cause_category_rules"] = std::move(rules);
}

void from_json(const nlohmann::json& j, MaintenancePolicy& p) {
  auto kind_of = [](const std::string& s) {
    const auto k = parse_action_kind(s);
    if (!k) throw Error(ErrorCode::kInvalidConfig, "unknown action kind " + s);
    return *k;
  };
  auto category_of = [](const std::string& s) {
    const auto c = parse_cause_category(s);
    if (!c) throw Error(ErrorCode::kInvalidConfig, "unknown cause category " + s);
    return *c;
  };
  if (j.contains("costs")) {
    p.costs.clear();
    for (const auto& [k, v] : j.at("costs").items()) p.costs[kind_of(k)] = v.get<double>();
  }
  if (j.contains("applicability")) {
    p.applicability.clear();
    for (const auto& [cat, kinds] : j.at("applicability").items()) {
      auto& set = p.applicability[category_of(cat)];
      for (const auto& k : kinds) set.insert(kind_of(k.get<std::string>()));
    }
  }
  if (j.contains("cause_category_rules")) {
    p.cause_category_rules.clear();
    for (const auto& rule : j.at("cause_category_rules")) {
      p.cause_category_rules.emplace_back(rule.at(0).get<std::string>(),
                                          category_of(rule.at(1).get<std::string>()));
    }
  }
}

void to_json(nlohmann::json& j, const MaintenanceAction& a) {
  j = {{"id", a.id},
       {"issued_at_ms", a.issued_at_ms},
       {"target", a.target},
       {"action", std::string(to_string(a.kind))},
       {"reason_metric", a.reason_metric},
       {"reason_score", score_to_json(a.reason_score)},
       {"cycle_s", a.cycle_s}};
}

}  // namespace availscope
