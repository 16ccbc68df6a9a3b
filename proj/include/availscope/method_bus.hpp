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

// Registry of analysis methods. Every method declares the shape of input it
// takes and a parameter schema; the bus fills defaults, checks bounds and
// dispatches.

#ifndef AVAILSCOPE_METHOD_BUS_HPP_
#define AVAILSCOPE_METHOD_BUS_HPP_

#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "availscope/availability.hpp"
#include "availscope/model.hpp"
#include "availscope/rootcause.hpp"

namespace availscope {

enum class InputKind { kSingleSeries, kMetricMatrix, kEventLog, kSnapshot };
std::string_view to_string(InputKind kind);

enum class ParamType { kInt, kReal, kBool };
std::string_view to_string(ParamType type);

struct ParamSpec {
  ParamType type = ParamType::kReal;
  double default_value = 0.0;  // bools are 0/1
  std::optional<double> min;
  std::optional<double> max;
  bool min_exclusive = false;
  bool max_exclusive = false;
  std::string description;

  bool in_bounds(double v) const;
};

struct MethodDescriptor {
  std::string name;
  InputKind input_kind = InputKind::kSingleSeries;
  std::map<std::string, ParamSpec> param_schema;
  std::string description;
};

struct SnapshotInput {
  ServiceDependencyGraph topology;
  std::map<ServiceNode, ServiceObservation> observations;
};

using MethodInput =
    std::variant<MetricSeries, MetricMatrix, std::vector<UpDownEvent>, SnapshotInput>;
InputKind input_kind_of(const MethodInput& input);

// Resolved parameters: every schema entry present, ints integral, bools 0/1.
class ParamValues {
 public:
  ParamValues() = default;
  explicit ParamValues(std::map<std::string, double> values) : values_(std::move(values)) {}

  double real(const std::string& name) const { return values_.at(name); }
  int integer(const std::string& name) const { return static_cast<int>(values_.at(name)); }
  bool flag(const std::string& name) const { return values_.at(name) != 0.0; }
  const std::map<std::string, double>& all() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

struct MethodResult {
  nlohmann::json payload;
  std::vector<std::string> warnings;
};

using MethodImpl = std::function<MethodResult(const MethodInput&, const ParamValues&)>;

struct AnalysisReport {
  std::string method;
  std::string target;
  TimestampMs produced_at_ms = 0;
  nlohmann::json payload;
  std::vector<std::string> warnings;
};

// Missing params take their defaults. Throws kParamOutOfBounds for values
// outside the schema bounds and kInvalidArgument for unknown names or
// wrongly typed values.
ParamValues resolve_params(const MethodDescriptor& desc, const nlohmann::json& params);

class MethodBus {
 public:
  // Pre-registers the built-in methods.
  MethodBus();
  // Without built-ins.
  static MethodBus empty();

  // Throws kDuplicateName, or kInvalidConfig when a default is out of bounds.
  void register_method(MethodDescriptor desc, MethodImpl impl);

  // Sorted by name.
  std::vector<MethodDescriptor> list_methods() const;
  std::optional<MethodDescriptor> find(const std::string& name) const;
  bool contains(const std::string& name) const;

  // Throws kUnknownMethod, kInputKindMismatch, kParamOutOfBounds, and
  // whatever the implementation throws.
  AnalysisReport run_method(const std::string& name, const MethodInput& input,
                            const nlohmann::json& params = nlohmann::json::object(),
                            std::string target = {}, TimestampMs now_ms = 0) const;

 private:
  struct Tag {};
  explicit MethodBus(Tag) {}

  struct Entry {
    MethodDescriptor desc;
    MethodImpl impl;
  };

  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> methods_;
};

void register_builtin_methods(MethodBus& bus);

void to_json(nlohmann::json& j, const ParamSpec& p);
void to_json(nlohmann::json& j, const MethodDescriptor& d);
void to_json(nlohmann::json& j, const AnalysisReport& r);

}  // namespace availscope

#endif  // AVAILSCOPE_METHOD_BUS_HPP_
