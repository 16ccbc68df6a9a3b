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

// Metric ingestion: the newline-delimited record format, file loading, the
// shared per-key metric store and the TCP listener that feeds it.
//
// Record format, one object per line, keys in this order:
//   {"ts_ms":1714000000123,"ip":"10.0.0.3","service":"mysql","metric":"cpu_util","value":0.83}

#ifndef AVAILSCOPE_INGEST_HPP_
#define AVAILSCOPE_INGEST_HPP_

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "availscope/model.hpp"

namespace availscope {

struct IngestConfig {
  std::string listen_endpoint = "127.0.0.1:9100";
  TimestampMs out_of_order_buffer_ms = 5000;
  std::size_t store_capacity_per_key = 4096;
};

// Throws Error with kMalformedRecord, kMissingField or kNonFiniteValue; the
// message quotes the offending line.
MetricSample parse_metric_line(std::string_view line);

// Canonical newline-terminated record.
std::string serialize_metric_line(const MetricSample& sample);

struct IngestStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> errors;  // first few per-line errors
  std::vector<std::string> skipped_files;
};

struct LoadedMetrics {
  std::vector<MetricSeries> series;  // ordered by key
  IngestStats stats;
};

// Groups records by key, sorts by time and keeps the last of duplicate
// (key, ts_ms) records. Bad lines are counted, never fatal.
LoadedMetrics load_metrics_file(const std::string& path);

// Loads every regular file under a directory (or a single file) whose name
// ends in .ndjson, .jsonl or .log; files are merged before dedup. Files
// whose first record is not a metric record are skipped and listed.
LoadedMetrics load_metrics_path(const std::string& path);

struct StoreCounters {
  std::uint64_t accepted = 0;
  std::uint64_t replaced = 0;
  std::uint64_t late_dropped = 0;
  std::uint64_t rejected = 0;
};

// Bounded per-key store. Writers for different keys proceed in parallel;
// a reader of one key always sees a consistent copy of that key's series.
class MetricStore {
 public:
  enum class InsertResult { kInserted, kReplaced, kLateDropped };

  MetricStore(std::size_t capacity_per_key, TimestampMs out_of_order_buffer_ms);
  explicit MetricStore(const IngestConfig& config)
      : MetricStore(config.store_capacity_per_key, config.out_of_order_buffer_ms) {}

  MetricStore(const MetricStore&) = delete;
  MetricStore& operator=(const MetricStore&) = delete;

  InsertResult insert(const MetricSample& sample);
  void record_rejected() { rejected_.fetch_add(1, std::memory_order_relaxed); }

  std::optional<MetricSeries> snapshot(const MetricKey& key) const;
  std::vector<MetricSeries> snapshot_service(const ServiceNode& node) const;
  std::vector<MetricSeries> snapshot_all() const;
  std::vector<MetricKey> keys() const;

  StoreCounters counters() const;
  std::size_t capacity_per_key() const { return capacity_; }

 private:
  struct Slot {
    mutable std::mutex mu;
    std::deque<SeriesPoint> points;
  };

  Slot& slot_for(const MetricKey& key);

  const std::size_t capacity_;
  const TimestampMs reorder_ms_;
  mutable std::shared_mutex map_mu_;
  std::map<MetricKey, std::unique_ptr<Slot>> slots_;
  std::atomic<std::uint64_t> accepted_{0};
  std::atomic<std::uint64_t> replaced_{0};
  std::atomic<std::uint64_t> late_dropped_{0};
  std::atomic<std::uint64_t> rejected_{0};
};

// Feeds one newline-delimited chunk stream into a store. Holds the partial
// trailing line between calls. Used by the TCP listener and by tests.
class LineAssembler {
 public:
  explicit LineAssembler(MetricStore& store) : store_(store) {}
  void feed(std::string_view chunk);
  void finish();

 private:
  void consume(std::string_view line);

  MetricStore& store_;
  std::string pending_;
};

// TCP listener for the record stream. start() binds and returns; the
// accept loop and one thread per connection run until stop().
class MetricListener {
 public:
  MetricListener(IngestConfig config, MetricStore& store);
  ~MetricListener();

  MetricListener(const MetricListener&) = delete;
  MetricListener& operator=(const MetricListener&) = delete;

  // Throws Error(kBindFailure).
  void start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

  int port() const { return port_; }
  std::uint64_t connections_accepted() const { return connections_.load(); }

 private:
  void accept_loop();
  void serve_connection(int fd);

  IngestConfig config_;
  MetricStore& store_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> connections_{0};
  std::thread acceptor_;
  std::mutex conn_mu_;
  std::condition_variable_any stopped_cv_;
  std::set<int> open_fds_;
  std::vector<std::thread> workers_;
};

// Binds the configured endpoint and serves forever.
[[noreturn]] void run_listener(const IngestConfig& config, MetricStore& store);

// "host:port" -> (host, port). Throws Error(kInvalidArgument).
std::pair<std::string, int> parse_endpoint(const std::string& endpoint);

}  // namespace availscope

#endif  // AVAILSCOPE_INGEST_HPP_
