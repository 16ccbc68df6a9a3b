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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "availscope/error.hpp"
#include "availscope/ingest.hpp"

namespace availscope {

namespace {

constexpr std::size_t kMaxKeptErrors = 16;

[[noreturn]] void fail(ErrorCode code, const std::string& what, std::string_view line) {
  throw Error(code, what + ": " + std::string(line));
}

std::string require_string(const nlohmann::json& obj, const char* field,
                           std::string_view line) {
  const auto it = obj.find(field);
  if (it == obj.end()) fail(ErrorCode::kMissingField, std::string("missing field ") + field, line);
  if (!it->is_string() || it->get_ref<const std::string&>().empty()) {
    fail(ErrorCode::kMalformedRecord, std::string("field ") + field + " must be a non-empty string",
         line);
  }
  return it->get<std::string>();
}

bool names_non_finite(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!text.empty() && (text[0] == '+' || text[0] == '-')) text.erase(0, 1);
  return text == "nan" || text == "inf" || text == "infinity";
}

}  // namespace

MetricSample parse_metric_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);

  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    fail(ErrorCode::kMalformedRecord, "malformed record", line);
  }
  if (!obj.is_object()) fail(ErrorCode::kMalformedRecord, "record is not an object", line);

  MetricSample s;
  const auto ts = obj.find("ts_ms");
  if (ts == obj.end()) fail(ErrorCode::kMissingField, "missing field ts_ms", line);
  if (ts->is_number_unsigned()) {
    s.ts_ms = static_cast<TimestampMs>(ts->get<std::uint64_t>());
  } else if (ts->is_number_integer()) {
    s.ts_ms = ts->get<std::int64_t>();
  } else {
    fail(ErrorCode::kMalformedRecord, "ts_ms must be an integer", line);
  }
  if (s.ts_ms < 0) fail(ErrorCode::kMalformedRecord, "ts_ms must be non-negative", line);

  s.ip = require_string(obj, "ip", line);
  s.service = require_string(obj, "service", line);
  s.metric = require_string(obj, "metric", line);

  const auto value = obj.find("value");
  if (value == obj.end()) fail(ErrorCode::kMissingField, "missing field value", line);
  if (value->is_string()) {
    if (names_non_finite(value->get<std::string>())) {
      fail(ErrorCode::kNonFiniteValue, "non-finite value", line);
    }
    fail(ErrorCode::kMalformedRecord, "value must be a number", line);
  }
  if (!value->is_number()) fail(ErrorCode::kMalformedRecord, "value must be a number", line);
  s.value = value->get<double>();
  if (!std::isfinite(s.value)) fail(ErrorCode::kNonFiniteValue, "non-finite value", line);
  return s;
}

std::string serialize_metric_line(const MetricSample& sample) {
  std::string out;
  out.reserve(96 + sample.ip.size() + sample.service.size() + sample.metric.size());
  out += "{\"ts_ms\":";
  out += std::to_string(sample.ts_ms);
  out += ",\"ip\":";
  out += nlohmann::json(sample.ip).dump();
  out += ",\"service\":";
  out += nlohmann::json(sample.service).dump();
  out += ",\"metric\":";
  out += nlohmann::json(sample.metric).dump();
  out += ",\"value\":";
  out += format_double(sample.value);
  out += "}\n";
  return out;
}

namespace {

struct Collector {
  struct Entry {
    TimestampMs ts;
    std::size_t seq;
    double value;
  };
  std::map<MetricKey, std::vector<Entry>> by_key;
  IngestStats stats;
  std::size_t seq = 0;

  void add_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') return;
    try {
      const auto s = parse_metric_line(line);
      by_key[s.key()].push_back({s.ts_ms, seq++, s.value});
      ++stats.accepted;
    } catch (const Error& e) {
      ++stats.rejected;
      if (stats.errors.size() < kMaxKeptErrors) stats.errors.emplace_back(e.what());
    }
  }

  // With skip_foreign, a file whose first record is not a metric record is
  // left out entirely (a label or event log sitting next to the metrics).
  void read_file(const std::string& path, bool skip_foreign = false) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kFileUnreadable, "cannot read metrics file " + path);
    std::string line;
    bool checked = !skip_foreign;
    while (std::getline(in, line)) {
      if (!checked) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        checked = true;
        try {
          parse_metric_line(line);
        } catch (const Error&) {
          stats.skipped_files.push_back(path);
          return;
        }
      }
      add_line(line);
    }
    if (in.bad()) throw Error(ErrorCode::kFileUnreadable, "read error on " + path);
  }

  LoadedMetrics finish() {
    LoadedMetrics out;
    out.stats = stats;
    for (auto& [key, entries] : by_key) {
      std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq;
      });
      MetricSeries series{key, {}};
      series.points.reserve(entries.size());
      for (const auto& e : entries) {
        if (!series.points.empty() && series.points.back().ts_ms == e.ts) {
          series.points.back().value = e.value;  // last occurrence wins
          ++out.stats.duplicates;
        } else {
          series.points.push_back({e.ts, e.value});
        }
      }
      out.series.push_back(std::move(series));
    }
    return out;
  }
};

bool has_metrics_extension(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  return ext == ".ndjson" || ext == ".jsonl" || ext == ".log";
}

}  // namespace

LoadedMetrics load_metrics_file(const std::string& path) {
  Collector c;
  c.read_file(path);
  return c.finish();
}

LoadedMetrics load_metrics_path(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(path, ec)) return load_metrics_file(path);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path, ec)) {
    if (entry.is_regular_file() && has_metrics_extension(entry.path())) {
      files.push_back(entry.path());
    }
  }
  if (ec) throw Error(ErrorCode::kFileUnreadable, "cannot list " + path);
  std::sort(files.begin(), files.end());
  Collector c;
  for (const auto& f : files) c.read_file(f.string(), true);
  return c.finish();
}

}  // namespace availscope
