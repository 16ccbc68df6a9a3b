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

#include "availscope/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "availscope/availability.hpp"
#include "availscope/causal.hpp"
#include "availscope/config.hpp"
#include "availscope/engine.hpp"
#include "availscope/entropy.hpp"
#include "availscope/error.hpp"
#include "availscope/faultsim.hpp"
#include "availscope/http_server.hpp"
#include "availscope/ingest.hpp"
#include "availscope/method_bus.hpp"
#include "availscope/pipeline.hpp"

namespace availscope {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::kMalformedRecord, "not a number: '" + cell + "'");
  }
  if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "non-finite cell " + cell);
  return v;
}

bool is_number(const std::string& cell) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileUnreadable, "cannot read " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    auto cells = split_commas(line);
    if (first) {
      first = false;
      if (!is_number(cells.front())) {
        t.header = std::move(cells);
        continue;
      }
    }
    std::vector<std::optional<double>> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c));
    t.rows.push_back(std::move(row));
  }
  const auto width = t.header.empty() ? (t.rows.empty() ? 0 : t.rows.front().size())
                                      : t.header.size();
  for (auto& row : t.rows) {
    if (row.size() != width) {
      throw Error(ErrorCode::kMalformedRecord, path + ": ragged row");
    }
  }
  if (t.rows.empty()) throw Error(ErrorCode::kEmptyInput, path + " has no data rows");
  return t;
}

MetricSeries series_from_csv(const CsvTable& table, const std::string& column) {
  MetricSeries s;
  s.key = {"", "", column.empty() ? "value" : column};
  std::size_t col = 0;
  bool with_ts = false;
  if (!column.empty()) {
    const auto it = std::find(table.header.begin(), table.header.end(), column);
    if (it == table.header.end()) {
      throw Error(ErrorCode::kMissingField, "no column named " + column);
    }
    col = static_cast<std::size_t>(it - table.header.begin());
  } else if (!table.rows.empty() && table.rows.front().size() == 2) {
    with_ts = true;
    col = 1;
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cell = table.rows[r][col];
    if (!cell) continue;
    TimestampMs ts = static_cast<TimestampMs>(r);
    if (with_ts) {
      if (!table.rows[r][0]) continue;
      ts = static_cast<TimestampMs>(*table.rows[r][0]);
    }
    s.points.push_back({ts, *cell});
  }
  return s;
}

MetricMatrix matrix_from_csv(const CsvTable& table) {
  MetricMatrix m;
  m.interval_ms = 1;
  const auto width = table.rows.front().size();
  for (std::size_t c = 0; c < width; ++c) {
    m.columns.push_back(
        {"", "", table.header.empty() ? "x" + std::to_string(c) : table.header[c]});
  }
  m.rows = table.rows;
  return m;
}

namespace {

struct Printer {
  std::ostream& out;
  bool json;

  void emit(const nlohmann::json& j, const std::string& text) const {
    if (json) {
      out << j.dump(2) << "\n";
    } else {
      out << text;
    }
  }
};

std::string curve_text(const std::vector<EntropyValue>& curve) {
  std::ostringstream os;
  os << "scale\tsampen\tstatus\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& v = curve[i];
    os << (i + 1) << "\t" << (v.status == EntropyValue::Status::kUndefined ? "undefined"
                                                                            : format_double(v.value))
       << "\t"
       << (v.status == EntropyValue::Status::kDefined
               ? "defined"
               : v.status == EntropyValue::Status::kCapped ? "capped" : "undefined")
       << "\n";
  }
  return os.str();
}

std::string diagnosis_text(const Diagnosis& d) {
  std::ostringstream os;
  os << "entry " << to_string(d.entry) << "\n";
  os << "anomalous services:";
  for (const auto& n : d.anomalous_services) os << " " << to_string(n);
  os << "\ncandidate services:";
  for (const auto& n : d.candidate_services) os << " " << to_string(n);
  os << "\nranked causes:\n";
  for (std::size_t i = 0; i < d.ranked_causes.size(); ++i) {
    const auto& c = d.ranked_causes[i];
    os << "  " << (i + 1) << ". " << to_string(c.node) << " " << c.metric << " score="
       << (std::isinf(c.score) ? std::string("inf") : format_double(c.score)) << "\n";
  }
  if (d.ranked_causes.empty()) os << "  (none)\n";
  return os.str();
}

std::string graph_text(const MetricDependencyGraph& g) {
  std::ostringstream os;
  for (const auto& [a, b] : g.directed) {
    os << g.metrics[static_cast<std::size_t>(a)] << " -> " << g.metrics[static_cast<std::size_t>(b)]
       << "\n";
  }
  for (const auto& [a, b] : g.undirected) {
    os << g.metrics[static_cast<std::size_t>(a)] << " -- " << g.metrics[static_cast<std::size_t>(b)]
       << "\n";
  }
  if (g.directed.empty() && g.undirected.empty()) os << "(no edges)\n";
  return os.str();
}

FaultEvent parse_fault_option(const std::string& text) {
  const auto parts = split_commas(text);
  if (parts.size() != 6) {
    throw Error(ErrorCode::kInvalidArgument,
                "--fault wants kind,ip:service,metric,start,end,magnitude");
  }
  FaultEvent f;
  const auto kind = parse_fault_kind(parts[0]);
  if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown fault kind " + parts[0]);
  f.kind = *kind;
  const auto node = parse_service_node(parts[1]);
  if (!node) throw Error(ErrorCode::kInvalidArgument, "bad fault target " + parts[1]);
  f.target = *node;
  f.metric = parts[2];
  try {
    f.start_tick = std::stoll(parts[3]);
    f.end_tick = std::stoll(parts[4]);
    f.magnitude = std::stod(parts[5]);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad number in --fault " + text);
  }
  return f;
}

ServiceNode require_node(const std::string& text) {
  const auto node = parse_service_node(text);
  if (!node) throw Error(ErrorCode::kInvalidArgument, "expected ip:service, got " + text);
  return *node;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"availability analysis engine", args.empty() ? "availctl" : args.front()};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API, metric listener and maintenance loop");
  std::string serve_config, serve_listen = "127.0.0.1:8080", serve_metrics;
  serve->add_option("--config", serve_config, "engine config file");
  serve->add_option("--listen", serve_listen, "HTTP API host:port")->capture_default_str();
  serve->add_option("--metrics-listen", serve_metrics, "metric stream host:port");

  // entropy
  auto* entropy = app.add_subcommand("entropy", "multi-scale sample entropy of one series");
  std::string ent_input, ent_column;
  int ent_m = 2, ent_scale = 10;
  double ent_r = 0.15;
  entropy->add_option("--input", ent_input, "CSV series")->required();
  entropy->add_option("--column", ent_column, "column name");
  entropy->add_option("--m", ent_m, "template length")->capture_default_str();
  entropy->add_option("--r-fraction", ent_r, "tolerance fraction of stddev")->capture_default_str();
  entropy->add_option("--max-scale", ent_scale, "largest scale")->capture_default_str();

  // pc
  auto* pc = app.add_subcommand("pc", "PC-stable metric graph of a CSV matrix");
  std::string pc_input;
  PCConfig pc_cfg;
  bool pc_raw = false;
  pc->add_option("--input", pc_input, "CSV matrix with a header")->required();
  pc->add_option("--alpha", pc_cfg.alpha, "significance level")->capture_default_str();
  pc->add_option("--max-cond", pc_cfg.max_cond, "largest conditioning set")->capture_default_str();
  pc->add_option("--min-rows", pc_cfg.min_rows, "minimum complete rows")->capture_default_str();
  pc->add_flag("--no-standardize", pc_raw, "correlate raw columns");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "two-level root-cause diagnosis");
  std::string diag_topology, diag_metrics, diag_entry, diag_config;
  diagnose->add_option("--topology", diag_topology, "topology file")->required();
  diagnose->add_option("--metrics", diag_metrics, "metric file or directory")->required();
  diagnose->add_option("--entry", diag_entry, "entry service ip:service")->required();
  diagnose->add_option("--config", diag_config, "engine config file");

  // availability
  auto* avail = app.add_subcommand("availability", "MTTF, MTTR and availability of an event log");
  std::string av_events, av_target;
  avail->add_option("--events", av_events, "event log")->required();
  avail->add_option("--target", av_target, "only this ip:service");

  // forecast
  auto* forecast = app.add_subcommand("forecast", "threshold crossing of a score history");
  std::string fc_input;
  double fc_theta = 1.0;
  std::size_t fc_window = 30;
  forecast->add_option("--input", fc_input, "CSV of ts_ms,score")->required();
  forecast->add_option("--theta", fc_theta, "threshold")->capture_default_str();
  forecast->add_option("--fit-window", fc_window, "trailing points fitted")->capture_default_str();

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "generate labelled metric streams");
  std::string sim_spec, sim_out;
  std::optional<std::uint64_t> sim_seed;
  bool sim_random = false;
  int sim_services = 3, sim_metrics = 8;
  double sim_degree = 2.0, sim_ar = 0.5;
  std::optional<std::int64_t> sim_duration;
  std::vector<std::string> sim_faults;
  simulate_cmd->add_option("--spec", sim_spec, "simulation spec file");
  simulate_cmd->add_option("--seed", sim_seed, "PRNG seed");
  simulate_cmd->add_option("--out", sim_out, "output directory")->required();
  simulate_cmd->add_flag("--random", sim_random, "random topology and metric graphs");
  simulate_cmd->add_option("--services", sim_services, "services (--random)")->capture_default_str();
  simulate_cmd->add_option("--metrics", sim_metrics, "metrics per service (--random)")
      ->capture_default_str();
  simulate_cmd->add_option("--degree", sim_degree, "expected metric degree (--random)")
      ->capture_default_str();
  simulate_cmd->add_option("--ar", sim_ar, "noise AR coefficient (three-tier default)")
      ->capture_default_str();
  simulate_cmd->add_option("--duration", sim_duration, "ticks");
  simulate_cmd->add_option("--fault", sim_faults, "kind,ip:service,metric,start,end,magnitude");

  // methods
  auto* methods = app.add_subcommand("methods", "list registered analysis methods");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "run one method from the method bus");
  std::string an_method, an_input, an_params = "{}", an_column;
  analyze->add_option("--method", an_method, "method name")->required();
  analyze->add_option("--input", an_input, "CSV series or matrix, or event log");
  analyze->add_option("--params", an_params, "JSON object of parameters");
  analyze->add_option("--column", an_column, "series column");

  std::vector<const char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.push_back("availctl");
  for (const auto& a : storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    // subcommand synopsis when we got that far
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return 2;
  }

  const Printer print{out, format == "json"};
  try {
    if (*entropy) {
      EntropyConfig cfg;
      cfg.m = ent_m;
      cfg.r_fraction = ent_r;
      cfg.max_scale = ent_scale;
      const auto series = series_from_csv(read_csv(ent_input), ent_column);
      const auto curve = mse_curve(series.values(), cfg);
      print.emit(curve_to_json(curve), curve_text(curve));
    } else if (*pc) {
      pc_cfg.standardize = !pc_raw;
      pc_cfg.validate();
      const auto learned = learn_metric_graph(matrix_from_csv(read_csv(pc_input)), pc_cfg);
      for (const auto& d : learned.dropped) err << "warning: dropped degenerate column " << d << "\n";
      print.emit(learned, graph_text(learned.graph));
    } else if (*diagnose) {
      AppConfig cfg = diag_config.empty() ? AppConfig{} : load_config(diag_config);
      const auto topo = load_topology_file(diag_topology);
      const auto loaded = load_metrics_path(diag_metrics);
      if (loaded.stats.rejected > 0) {
        err << "warning: " << loaded.stats.rejected << " malformed metric lines skipped\n";
      }
      TimestampMs now = 0;
      for (const auto& s : loaded.series) {
        if (!s.points.empty()) now = std::max(now, s.points.back().ts_ms);
      }
      const auto result = run_diagnosis(topo, loaded.series, require_node(diag_entry), cfg, now);
      for (const auto& w : result.warnings) err << "warning: " << w << "\n";
      print.emit(result.diagnosis, diagnosis_text(result.diagnosis));
    } else if (*avail) {
      const auto events = load_event_log(av_events);
      auto reports = nlohmann::json::array();
      std::ostringstream text;
      std::optional<ServiceNode> only;
      if (!av_target.empty()) only = require_node(av_target);
      bool any = false;
      for (const auto& [target, log] : split_by_target(events)) {
        if (only && target != *only) continue;
        const auto r = availability(log);
        any = true;
        reports.push_back(r);
        text << to_string(target) << " mttf_ms=" << format_double(r.mttf_ms)
             << " mttr_ms=" << format_double(r.mttr_ms)
             << " availability=" << format_double(r.availability)
             << " failures=" << r.n_failures << "\n";
      }
      if (!any) throw Error(ErrorCode::kEmptyInput, "no events for the requested target");
      print.emit({{"reports", reports}}, text.str());
    } else if (*forecast) {
      const auto series = series_from_csv(read_csv(fc_input));
      std::vector<std::pair<TimestampMs, double>> history;
      for (const auto& p : series.points) history.emplace_back(p.ts_ms, p.value);
      const auto f = forecast_failure_time(history, fc_theta, fc_window);
      std::string text;
      switch (f.kind) {
        case ForecastResult::Kind::kCrossing:
          text = "crossing at " + format_double(f.crossing_ts_ms) + " ms\n";
          break;
        case ForecastResult::Kind::kAlreadyExceeded:
          text = "already exceeded\n";
          break;
        case ForecastResult::Kind::kNoTrend:
          text = "no trend\n";
          break;
      }
      print.emit(f, text);
    } else if (*simulate_cmd) {
      SimSpec spec;
      if (!sim_spec.empty()) {
        spec = load_sim_spec(sim_spec);
      } else if (sim_random) {
        spec = generate_random_spec(sim_services, sim_metrics, sim_degree, sim_seed.value_or(0));
      } else {
        spec = three_tier_spec(sim_seed.value_or(0), sim_ar);
      }
      if (sim_seed) spec.seed = *sim_seed;
      if (sim_duration) spec.duration_ticks = *sim_duration;
      for (const auto& f : sim_faults) spec.faults.push_back(parse_fault_option(f));
      const auto result = simulate(spec);
      write_sim_output(result, sim_out);
      print.emit({{"out", sim_out},
                  {"samples", result.samples.size()},
                  {"labels", result.labels.size()},
                  {"events", result.events.size()}},
                 "wrote " + std::to_string(result.samples.size()) + " samples, " +
                     std::to_string(result.labels.size()) + " labels, " +
                     std::to_string(result.events.size()) + " events to " + sim_out + "\n");
    } else if (*methods) {
      MethodBus bus;
      std::ostringstream text;
      for (const auto& d : bus.list_methods()) {
        text << d.name << " (" << to_string(d.input_kind) << ")";
        for (const auto& [name, spec] : d.param_schema) {
          text << " " << name << "=" << format_double(spec.default_value);
        }
        text << "\n";
      }
      print.emit({{"methods", bus.list_methods()}}, text.str());
    } else if (*analyze) {
      MethodBus bus;
      const auto desc = bus.find(an_method);
      if (!desc) throw Error(ErrorCode::kUnknownMethod, "unknown method " + an_method);
      if (an_input.empty()) throw Error(ErrorCode::kInvalidArgument, "--input is required");
      nlohmann::json params;
      try {
        params = nlohmann::json::parse(an_params);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("--params: ") + e.what());
      }
      MethodInput input;
      switch (desc->input_kind) {
        case InputKind::kSingleSeries:
          input = series_from_csv(read_csv(an_input), an_column);
          break;
        case InputKind::kMetricMatrix:
          input = matrix_from_csv(read_csv(an_input));
          break;
        case InputKind::kEventLog:
          input = load_event_log(an_input);
          break;
        case InputKind::kSnapshot:
          throw Error(ErrorCode::kInputKindMismatch, "snapshot methods run only inside serve");
      }
      const auto report = bus.run_method(an_method, input, params, an_input);
      for (const auto& w : report.warnings) err << "warning: " << w << "\n";
      print.emit(report, report.payload.dump(2) + "\n");
    } else if (*serve) {
      AppConfig cfg = serve_config.empty() ? AppConfig{} : load_config(serve_config);
      if (!serve_metrics.empty()) cfg.ingest.listen_endpoint = serve_metrics;
      Engine engine(cfg);
      MetricListener listener(cfg.ingest, engine.store());
      listener.start();
      engine.start();
      HttpServer http(engine);
      const auto [host, port] = parse_endpoint(serve_listen);
      http.bind(host, port);
      err << "metrics on " << cfg.ingest.listen_endpoint << " (port " << listener.port()
          << "), API on " << host << ":" << http.port() << "\n";
      http.listen();
      engine.stop();
      listener.stop();
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace availscope
