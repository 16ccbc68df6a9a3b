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

#include "availscope/method_bus.hpp"

#include <cmath>
#include <limits>
#include <mutex>

#include "availscope/causal.hpp"
#include "availscope/entropy.hpp"
#include "availscope/error.hpp"

namespace availscope {

std::string_view to_string(InputKind kind) {
  switch (kind) {
    case InputKind::kSingleSeries: return "single_series";
    case InputKind::kMetricMatrix: return "metric_matrix";
    case InputKind::kEventLog: return "event_log";
    case InputKind::kSnapshot: return "snapshot";
  }
  return "single_series";
}

std::string_view to_string(ParamType type) {
  switch (type) {
    case ParamType::kInt: return "int";
    case ParamType::kReal: return "real";
    case ParamType::kBool: return "bool";
  }
  return "real";
}

bool ParamSpec::in_bounds(double v) const {
  if (!std::isfinite(v)) return false;
  if (min && (min_exclusive ? !(v > *min) : !(v >= *min))) return false;
  if (max && (max_exclusive ? !(v < *max) : !(v <= *max))) return false;
  return true;
}

InputKind input_kind_of(const MethodInput& input) {
  return static_cast<InputKind>(input.index());
}

namespace {

std::string bounds_text(const ParamSpec& p) {
  std::string lo = p.min ? format_double(*p.min) : "-inf";
  std::string hi = p.max ? format_double(*p.max) : "inf";
  return std::string(p.min_exclusive || !p.min ? "(" : "[") + lo + ", " + hi +
         (p.max_exclusive || !p.max ? ")" : "]");
}

}  // namespace

ParamValues resolve_params(const MethodDescriptor& desc, const nlohmann::json& params) {
  if (!params.is_null() && !params.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "params must be an object");
  }
  std::map<std::string, double> values;
  for (const auto& [name, spec] : desc.param_schema) values[name] = spec.default_value;
  if (params.is_null()) return ParamValues(std::move(values));

  for (const auto& [name, raw] : params.items()) {
    const auto it = desc.param_schema.find(name);
    if (it == desc.param_schema.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "method " + desc.name + " has no parameter '" + name + "'");
    }
    const auto& spec = it->second;
    double v = 0.0;
    switch (spec.type) {
      case ParamType::kBool:
        if (!raw.is_boolean()) {
          throw Error(ErrorCode::kInvalidArgument, "parameter " + name + " must be a bool");
        }
        v = raw.get<bool>() ? 1.0 : 0.0;
        break;
      case ParamType::kInt:
        if (!raw.is_number()) {
          throw Error(ErrorCode::kInvalidArgument, "parameter " + name + " must be an integer");
        }
        v = raw.get<double>();
        if (std::floor(v) != v) {
          throw Error(ErrorCode::kInvalidArgument, "parameter " + name + " must be an integer");
        }
        break;
      case ParamType::kReal:
        if (!raw.is_number()) {
          throw Error(ErrorCode::kInvalidArgument, "parameter " + name + " must be a number");
        }
        v = raw.get<double>();
        break;
    }
    if (!spec.in_bounds(v)) {
      throw Error(ErrorCode::kParamOutOfBounds, "parameter " + name + "=" + format_double(v) +
                                                    " outside " + bounds_text(spec));
    }
    values[name] = v;
  }
  return ParamValues(std::move(values));
}

MethodBus::MethodBus() { register_builtin_methods(*this); }

MethodBus MethodBus::empty() { return MethodBus(Tag{}); }

void MethodBus::register_method(MethodDescriptor desc, MethodImpl impl) {
  if (desc.name.empty()) throw Error(ErrorCode::kInvalidArgument, "method name is empty");
  for (const auto& [pname, spec] : desc.param_schema) {
    if (!spec.in_bounds(spec.default_value)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "default of " + desc.name + "." + pname + " is out of bounds");
    }
  }
  std::unique_lock lock(mu_);
  if (methods_.count(desc.name)) {
    throw Error(ErrorCode::kDuplicateName, "method " + desc.name + " already registered");
  }
  auto name = desc.name;
  methods_.emplace(std::move(name), Entry{std::move(desc), std::move(impl)});
}

std::vector<MethodDescriptor> MethodBus::list_methods() const {
  std::shared_lock lock(mu_);
  std::vector<MethodDescriptor> out;
  out.reserve(methods_.size());
  for (const auto& [name, entry] : methods_) out.push_back(entry.desc);
  return out;
}

std::optional<MethodDescriptor> MethodBus::find(const std::string& name) const {
  std::shared_lock lock(mu_);
  const auto it = methods_.find(name);
  if (it == methods_.end()) return std::nullopt;
  return it->second.desc;
}

bool MethodBus::contains(const std::string& name) const {
  std::shared_lock lock(mu_);
  return methods_.count(name) > 0;
}

AnalysisReport MethodBus::run_method(const std::string& name, const MethodInput& input,
                                     const nlohmann::json& params, std::string target,
                                     TimestampMs now_ms) const {
  MethodDescriptor desc;
  MethodImpl impl;
  {
    std::shared_lock lock(mu_);
    const auto it = methods_.find(name);
    if (it == methods_.end()) throw Error(ErrorCode::kUnknownMethod, "unknown method " + name);
    desc = it->second.desc;
    impl = it->second.impl;
  }
  if (input_kind_of(input) != desc.input_kind) {
    throw Error(ErrorCode::kInputKindMismatch,
                "method " + name + " takes " + std::string(to_string(desc.input_kind)) +
                    ", got " + std::string(to_string(input_kind_of(input))));
  }
  const auto values = resolve_params(desc, params);
  auto result = impl(input, values);
  AnalysisReport report;
  report.method = name;
  report.target = std::move(target);
  report.produced_at_ms = now_ms;
  report.payload = std::move(result.payload);
  report.warnings = std::move(result.warnings);
  return report;
}

namespace {

constexpr double kBig = 1e9;

ParamSpec int_param(double def, double lo, double hi, std::string text) {
  ParamSpec p;
  p.type = ParamType::kInt;
  p.default_value = def;
  p.min = lo;
  p.max = hi;
  p.description = std::move(text);
  return p;
}

ParamSpec real_param(double def, std::optional<double> lo, bool lo_ex, std::optional<double> hi,
                     bool hi_ex, std::string text) {
  ParamSpec p;
  p.type = ParamType::kReal;
  p.default_value = def;
  p.min = lo;
  p.min_exclusive = lo_ex;
  p.max = hi;
  p.max_exclusive = hi_ex;
  p.description = std::move(text);
  return p;
}

ParamSpec bool_param(bool def, std::string text) {
  ParamSpec p;
  p.type = ParamType::kBool;
  p.default_value = def ? 1.0 : 0.0;
  p.min = 0.0;
  p.max = 1.0;
  p.description = std::move(text);
  return p;
}

EntropyConfig entropy_config(const ParamValues& pv) {
  EntropyConfig cfg;
  cfg.m = pv.integer("m");
  cfg.r_fraction = pv.real("r_fraction");
  cfg.max_scale = pv.integer("max_scale");
  return cfg;
}

PCConfig pc_config(const ParamValues& pv) {
  PCConfig cfg;
  cfg.alpha = pv.real("alpha");
  cfg.max_cond = pv.integer("max_cond");
  cfg.standardize = pv.flag("standardize");
  cfg.min_rows = static_cast<std::size_t>(pv.integer("min_rows"));
  return cfg;
}

void split_baseline(const std::vector<double>& v, std::size_t baseline_len,
                    std::size_t window_len) {
  if (v.size() < baseline_len + window_len) {
    throw Error(ErrorCode::kSeriesTooShort,
                "series has " + std::to_string(v.size()) + " points, needs " +
                    std::to_string(baseline_len + window_len));
  }
}

}  // namespace

void register_builtin_methods(MethodBus& bus) {
  bus.register_method(
      {"mse",
       InputKind::kSingleSeries,
       {{"m", int_param(2, 1, 10, "template length")},
        {"r_fraction", real_param(0.15, 0.0, true, 10.0, false, "tolerance as a fraction of stddev")},
        {"max_scale", int_param(10, 1, 100, "largest coarse-graining scale")}},
       "multi-scale sample entropy curve of one series"},
      [](const MethodInput& in, const ParamValues& pv) {
        const auto values = std::get<MetricSeries>(in).values();
        return MethodResult{curve_to_json(mse_curve(values, entropy_config(pv))), {}};
      });

  bus.register_method(
      {"pc",
       InputKind::kMetricMatrix,
       {{"alpha", real_param(0.01, 0.0, true, 1.0, true, "significance level")},
        {"max_cond", int_param(3, 0, 20, "largest conditioning set")},
        {"standardize", bool_param(true, "z-score columns before correlating")},
        {"min_rows", int_param(100, 4, kBig, "minimum complete rows")}},
       "PC-stable causal graph over the matrix columns"},
      [](const MethodInput& in, const ParamValues& pv) {
        const auto learned = learn_metric_graph(std::get<MetricMatrix>(in), pc_config(pv));
        MethodResult r{learned, {}};
        for (const auto& d : learned.dropped) r.warnings.push_back("dropped degenerate " + d);
        for (const auto& [a, b] : learned.conflicts) {
          r.warnings.push_back("orientation conflict " + a + " - " + b);
        }
        return r;
      });

  bus.register_method(
      {"zscore",
       InputKind::kSingleSeries,
       {{"baseline_len", int_param(60, 2, kBig, "leading points used as the baseline")},
        {"window_len", int_param(30, 1, kBig, "trailing points tested")},
        {"z_threshold", real_param(3.0, 0.0, true, std::nullopt, false, "anomaly threshold")}},
       "largest z-score in a trailing window against a leading baseline"},
      [](const MethodInput& in, const ParamValues& pv) {
        const auto v = std::get<MetricSeries>(in).values();
        const auto bl = static_cast<std::size_t>(pv.integer("baseline_len"));
        const auto wl = static_cast<std::size_t>(pv.integer("window_len"));
        split_baseline(v, bl, wl);
        const std::span<const double> all(v);
        const double z = zscore_anomaly(all.first(bl), all.last(wl));
        return MethodResult{{{"z", score_to_json(z)}, {"anomalous", z > pv.real("z_threshold")}},
                            {}};
      });

  bus.register_method(
      {"cusum",
       InputKind::kSingleSeries,
       {{"baseline_len", int_param(60, 2, kBig, "leading points that fix mean and sigma")},
        {"k", real_param(0.5, 0.0, true, std::nullopt, false, "slack in sigma units")},
        {"h", real_param(5.0, 0.0, true, std::nullopt, false, "decision interval in sigma units")}},
       "two-sided CUSUM change points after a leading baseline"},
      [](const MethodInput& in, const ParamValues& pv) {
        const auto& series = std::get<MetricSeries>(in);
        const auto v = series.values();
        const auto bl = static_cast<std::size_t>(pv.integer("baseline_len"));
        split_baseline(v, bl, 0);
        const std::span<const double> all(v);
        const auto base = all.first(bl);
        const double mu0 = mean(base);
        const double sigma = stddev(base);
        AnomalyConfig cfg;
        cfg.cusum_k = pv.real("k");
        cfg.cusum_h = pv.real("h");
        const auto idx = cusum_change(all, mu0, sigma, cfg);
        auto ts = nlohmann::json::array();
        for (auto i : idx) ts.push_back(series.points[i].ts_ms);
        return MethodResult{
            {{"mu0", mu0}, {"sigma", sigma}, {"change_points", idx}, {"change_ts_ms", ts}}, {}};
      });

  bus.register_method(
      {"correlation",
       InputKind::kMetricMatrix,
       {{"standardize", bool_param(true, "z-score columns before correlating")}},
       "Pearson correlation over complete rows"},
      [](const MethodInput& in, const ParamValues& pv) {
        const auto c = correlation_matrix(std::get<MetricMatrix>(in), pv.flag("standardize"));
        auto rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < c.corr.rows(); ++i) {
          auto row = nlohmann::json::array();
          for (Eigen::Index j = 0; j < c.corr.cols(); ++j) row.push_back(c.corr(i, j));
          rows.push_back(std::move(row));
        }
        MethodResult r;
        r.payload = {{"columns", metric_labels(c.columns)},
                     {"rows", c.rows},
                     {"matrix", std::move(rows)}};
        auto dropped = nlohmann::json::array();
        for (const auto& k : c.dropped) dropped.push_back(to_string(k.node()) + ":" + k.metric);
        r.payload["dropped"] = std::move(dropped);
        return r;
      });

  bus.register_method(
      {"availability",
       InputKind::kEventLog,
       {},
       "MTTF, MTTR and availability per target of an up/down log"},
      [](const MethodInput& in, const ParamValues&) {
        const auto& events = std::get<std::vector<UpDownEvent>>(in);
        MethodResult r;
        auto reports = nlohmann::json::array();
        for (const auto& [target, log] : split_by_target(events)) {
          try {
            reports.push_back(availability(log));
          } catch (const Error& e) {
            r.warnings.push_back(to_string(target) + ": " + e.what());
          }
        }
        if (reports.empty()) {
          throw Error(ErrorCode::kNoCompletedInterval, "no target has completed intervals");
        }
        r.payload = {{"reports", std::move(reports)}};
        return r;
      });

  bus.register_method(
      {"forecast",
       InputKind::kSingleSeries,
       {{"theta", real_param(1.0, 0.0, true, std::nullopt, false, "failure threshold")},
        {"fit_window", int_param(30, 2, kBig, "trailing points in the fit")}},
       "linear extrapolation of a score history to its threshold crossing"},
      [](const MethodInput& in, const ParamValues& pv) {
        const auto& series = std::get<MetricSeries>(in);
        std::vector<std::pair<TimestampMs, double>> history;
        history.reserve(series.points.size());
        for (const auto& p : series.points) history.emplace_back(p.ts_ms, p.value);
        const auto f = forecast_failure_time(history, pv.real("theta"),
                                             static_cast<std::size_t>(pv.integer("fit_window")));
        return MethodResult{f, {}};
      });
}

void to_json(nlohmann::json& j, const ParamSpec& p) {
  j = {{"type", std::string(to_string(p.type))}};
  if (p.type == ParamType::kBool) {
    j["default"] = p.default_value != 0.0;
    return;
  }
  if (p.type == ParamType::kInt) {
    j["default"] = static_cast<long long>(p.default_value);
  } else {
    j["default"] = p.default_value;
  }
  j["min"] = p.min ? nlohmann::json(*p.min) : nlohmann::json(nullptr);
  j["max"] = p.max ? nlohmann::json(*p.max) : nlohmann::json(nullptr);
  j["min_exclusive"] = p.min_exclusive;
  j["max_exclusive"] = p.max_exclusive;
  if (!p.description.empty()) j["description"] = p.description;
}

void to_json(nlohmann::json& j, const MethodDescriptor& d) {
  auto params = nlohmann::json::object();
  for (const auto& [name, spec] : d.param_schema) params[name] = spec;
  j = {{"name", d.name},
       {"input_kind", std::string(to_string(d.input_kind))},
       {"params", std::move(params)},
       {"description", d.description}};
}

void to_json(nlohmann::json& j, const AnalysisReport& r) {
  j = {{"method", r.method},
       {"target", r.target},
       {"produced_at_ms", r.produced_at_ms},
       {"payload", r.payload},
       {"warnings", r.warnings}};
}

}  // namespace availscope
