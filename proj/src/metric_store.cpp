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

#include "availscope/error.hpp"
#include "availscope/ingest.hpp"

namespace availscope {

MetricStore::MetricStore(std::size_t capacity_per_key, TimestampMs out_of_order_buffer_ms)
    : capacity_(capacity_per_key), reorder_ms_(out_of_order_buffer_ms) {
  if (capacity_ == 0) {
    throw Error(ErrorCode::kInvalidConfig, "store_capacity_per_key must be positive");
  }
  if (reorder_ms_ < 0) {
    throw Error(ErrorCode::kInvalidConfig, "out_of_order_buffer_ms must be non-negative");
  }
}

MetricStore::Slot& MetricStore::slot_for(const MetricKey& key) {
  {
    std::shared_lock lock(map_mu_);
    const auto it = slots_.find(key);
    if (it != slots_.end()) return *it->second;
  }
  std::unique_lock lock(map_mu_);
  auto& slot = slots_[key];
  if (!slot) slot = std::make_unique<Slot>();
  return *slot;
}

MetricStore::InsertResult MetricStore::insert(const MetricSample& sample) {
  Slot& slot = slot_for(sample.key());
  std::lock_guard lock(slot.mu);
  auto& pts = slot.points;

  if (!pts.empty() && sample.ts_ms < pts.back().ts_ms - reorder_ms_) {
    late_dropped_.fetch_add(1, std::memory_order_relaxed);
    return InsertResult::kLateDropped;
  }

  const auto pos = std::lower_bound(
      pts.begin(), pts.end(), sample.ts_ms,
      [](const SeriesPoint& p, TimestampMs ts) { return p.ts_ms < ts; });
  if (pos != pts.end() && pos->ts_ms == sample.ts_ms) {
    pos->value = sample.value;
    replaced_.fetch_add(1, std::memory_order_relaxed);
    return InsertResult::kReplaced;
  }
  pts.insert(pos, SeriesPoint{sample.ts_ms, sample.value});
  while (pts.size() > capacity_) pts.pop_front();
  accepted_.fetch_add(1, std::memory_order_relaxed);
  return InsertResult::kInserted;
}

std::optional<MetricSeries> MetricStore::snapshot(const MetricKey& key) const {
  const Slot* slot = nullptr;
  {
    std::shared_lock lock(map_mu_);
    const auto it = slots_.find(key);
    if (it == slots_.end()) return std::nullopt;
    slot = it->second.get();
  }
  // Slots are never erased, so the pointer stays valid after the map lock.
  std::lock_guard lock(slot->mu);
  return MetricSeries{key, {slot->points.begin(), slot->points.end()}};
}

std::vector<MetricKey> MetricStore::keys() const {
  std::shared_lock lock(map_mu_);
  std::vector<MetricKey> out;
  out.reserve(slots_.size());
  for (const auto& [key, slot] : slots_) out.push_back(key);
  return out;
}

std::vector<MetricSeries> MetricStore::snapshot_service(const ServiceNode& node) const {
  std::vector<MetricSeries> out;
  for (const auto& key : keys()) {
    if (key.ip != node.ip || key.service != node.service) continue;
    if (auto s = snapshot(key)) out.push_back(std::move(*s));
  }
  return out;
}

std::vector<MetricSeries> MetricStore::snapshot_all() const {
  std::vector<MetricSeries> out;
  for (const auto& key : keys()) {
    if (auto s = snapshot(key)) out.push_back(std::move(*s));
  }
  return out;
}

StoreCounters MetricStore::counters() const {
  return {accepted_.load(), replaced_.load(), late_dropped_.load(), rejected_.load()};
}

void LineAssembler::feed(std::string_view chunk) {
  std::size_t start = 0;
  while (true) {
    const auto nl = chunk.find('\n', start);
    if (nl == std::string_view::npos) {
      pending_.append(chunk.substr(start));
      return;
    }
    if (pending_.empty()) {
      consume(chunk.substr(start, nl - start));
    } else {
      pending_.append(chunk.substr(start, nl - start));
      consume(pending_);
      pending_.clear();
    }
    start = nl + 1;
  }
}

void LineAssembler::finish() {
  if (!pending_.empty()) {
    consume(pending_);
    pending_.clear();
  }
}

void LineAssembler::consume(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto first = line.find_first_not_of(" \t");
  if (first == std::string_view::npos || line[first] == '#') return;
  try {
    store_.insert(parse_metric_line(line));
  } catch (const Error&) {
    store_.record_rejected();
  }
}

}  // namespace availscope
