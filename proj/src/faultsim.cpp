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

#include "availscope/faultsim.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "availscope/error.hpp"
#include "availscope/ingest.hpp"

namespace availscope {

namespace fs = std::filesystem;

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::kCpuHog: return "cpu_hog";
    case FaultKind::kMemLeak: return "mem_leak";
    case FaultKind::kIoSaturation: return "io_saturation";
    case FaultKind::kConfigError: return "config_error";
    case FaultKind::kDependencySlowdown: return "dependency_slowdown";
  }
  return "cpu_hog";
}

std::optional<FaultKind> parse_fault_kind(std::string_view text) {
  for (auto k : {FaultKind::kCpuHog, FaultKind::kMemLeak, FaultKind::kIoSaturation,
                 FaultKind::kConfigError, FaultKind::kDependencySlowdown}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

namespace {

// Metric evaluation order inside one service: Kahn's algorithm with
// declaration order as the tie-break. Empty when the edges contain a cycle.
std::vector<int> metric_order(const ServiceModel& svc) {
  const int n = static_cast<int>(svc.metrics.size());
  std::map<std::string, int> index;
  for (int i = 0; i < n; ++i) index[svc.metrics[static_cast<std::size_t>(i)].name] = i;
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (const auto& e : svc.edges) {
    const int from = index.at(e.from);
    const int to = index.at(e.to);
    children[static_cast<std::size_t>(from)].push_back(to);
    ++indeg[static_cast<std::size_t>(to)];
  }
  std::set<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indeg[static_cast<std::size_t>(i)] == 0) ready.insert(i);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (int c : children[static_cast<std::size_t>(v)]) {
      if (--indeg[static_cast<std::size_t>(c)] == 0) ready.insert(c);
    }
  }
  if (static_cast<int>(order.size()) != n) return {};
  return order;
}

// Flattened linear system over every metric of every service.
struct LinearSystem {
  std::vector<std::size_t> offset;  // per service
  std::size_t n = 0;
  Eigen::MatrixXd w;  // contemporaneous, x = b + W x + C x(t-1) + e
  Eigen::MatrixXd c;  // one-tick lagged coupling
  Eigen::VectorXd b;
  Eigen::VectorXd phi;
  Eigen::VectorXd noise;
};

LinearSystem build_system(const SimSpec& spec) {
  LinearSystem sys;
  for (const auto& svc : spec.services) {
    sys.offset.push_back(sys.n);
    sys.n += svc.metrics.size();
  }
  const auto n = static_cast<Eigen::Index>(sys.n);
  sys.w = Eigen::MatrixXd::Zero(n, n);
  sys.c = Eigen::MatrixXd::Zero(n, n);
  sys.b = Eigen::VectorXd::Zero(n);
  sys.phi = Eigen::VectorXd::Zero(n);
  sys.noise = Eigen::VectorXd::Zero(n);
  auto local = [](const ServiceModel& svc, const std::string& name) {
    for (std::size_t i = 0; i < svc.metrics.size(); ++i) {
      if (svc.metrics[i].name == name) return i;
    }
    return svc.metrics.size();
  };
  for (std::size_t s = 0; s < spec.services.size(); ++s) {
    const auto& svc = spec.services[s];
    for (std::size_t j = 0; j < svc.metrics.size(); ++j) {
      const auto g = static_cast<Eigen::Index>(sys.offset[s] + j);
      sys.b(g) = svc.metrics[j].intercept;
      sys.phi(g) = svc.metrics[j].ar;
      sys.noise(g) = svc.metrics[j].noise;
    }
    for (const auto& e : svc.edges) {
      sys.w(static_cast<Eigen::Index>(sys.offset[s] + local(svc, e.to)),
            static_cast<Eigen::Index>(sys.offset[s] + local(svc, e.from))) += e.weight;
    }
  }
  for (const auto& [caller, callee] : spec.topology.edges) {
    const auto& from = spec.services[callee];
    const auto& to = spec.services[caller];
    sys.c(static_cast<Eigen::Index>(sys.offset[caller] + local(to, to.interface_metric)),
          static_cast<Eigen::Index>(sys.offset[callee] + local(from, from.interface_metric))) +=
        to.coupling_weight;
  }
  return sys;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

void require_valid(const SimSpec& spec) {
  const auto problems = validate_spec(spec);
  if (!problems.empty()) throw Error(ErrorCode::kInvalidSpec, "invalid spec: " + join(problems));
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

Moments compute_moments(const LinearSystem& sys) {
  const auto n = static_cast<Eigen::Index>(sys.n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a = (id - sys.w).inverse();
  Moments m;
  m.mean = (id - sys.w - sys.c).fullPivLu().solve(sys.b);

  // State s(t) = [x(t); e(t)] = F s(t-1) + G eta(t) + const; Smith doubling
  // for the stationary covariance P = F P F' + G G'.
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, n);
  const Eigen::MatrixXd phi = sys.phi.asDiagonal();
  Eigen::VectorXd innov(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    innov(i) = std::sqrt(1.0 - sys.phi(i) * sys.phi(i)) * sys.noise(i);
  }
  const Eigen::MatrixXd d = innov.asDiagonal();
  f.topLeftCorner(n, n) = a * sys.c;
  f.topRightCorner(n, n) = a * phi;
  f.bottomRightCorner(n, n) = phi;
  g.topRows(n) = a * d;
  g.bottomRows(n) = d;

  Eigen::MatrixXd p = g * g.transpose();
  Eigen::MatrixXd fk = f;
  for (int iter = 0; iter < 64 && fk.cwiseAbs().maxCoeff() > 1e-15; ++iter) {
    p += fk * p * fk.transpose();
    fk = fk * fk;
  }
  m.sd = p.diagonal().head(n).cwiseMax(0.0).cwiseSqrt();
  return m;
}

}  // namespace

std::vector<std::string> validate_spec(const SimSpec& spec) {
  std::vector<std::string> v;
  for (const auto& tv : validate_topology(spec.topology)) v.push_back("topology: " + tv.detail);
  if (spec.topology.nodes.empty()) v.push_back("topology has no services");
  if (spec.tick_ms < 1) v.push_back("tick_ms must be >= 1");
  if (spec.start_ms < 0) v.push_back("start_ms must be >= 0");
  if (spec.duration_ticks < 1) v.push_back("duration_ticks must be >= 1");
  if (spec.services.size() != spec.topology.nodes.size()) {
    v.push_back("need exactly one service model per topology node");
    return v;
  }
  bool structure_ok = v.empty();
  for (std::size_t s = 0; s < spec.services.size(); ++s) {
    const auto& svc = spec.services[s];
    const auto who = to_string(svc.node);
    if (svc.node != spec.topology.nodes[s]) {
      v.push_back("service model " + who + " is out of topology order");
      structure_ok = false;
    }
    if (svc.metrics.empty()) v.push_back(who + ": no metrics");
    std::set<std::string> names;
    for (const auto& m : svc.metrics) {
      if (m.name.empty()) v.push_back(who + ": empty metric name");
      if (!names.insert(m.name).second) v.push_back(who + ": duplicate metric " + m.name);
      if (!(m.noise > 0.0) || !std::isfinite(m.noise)) {
        v.push_back(who + ":" + m.name + ": noise must be > 0");
      }
      if (!(std::fabs(m.ar) < 1.0)) v.push_back(who + ":" + m.name + ": |ar| must be < 1");
      if (!std::isfinite(m.intercept)) v.push_back(who + ":" + m.name + ": bad intercept");
    }
    bool edges_ok = true;
    for (const auto& e : svc.edges) {
      if (!names.count(e.from) || !names.count(e.to)) {
        v.push_back(who + ": edge " + e.from + "->" + e.to + " names an unknown metric");
        edges_ok = false;
      } else if (e.from == e.to) {
        v.push_back(who + ": self loop on " + e.from);
        edges_ok = false;
      }
      if (!std::isfinite(e.weight)) v.push_back(who + ": non-finite edge weight");
    }
    if (edges_ok && metric_order(svc).empty() && !svc.metrics.empty()) {
      v.push_back(who + ": metric edges contain a cycle");
      edges_ok = false;
    }
    if (!names.count(svc.interface_metric)) {
      v.push_back(who + ": interface metric '" + svc.interface_metric + "' is not a metric");
      edges_ok = false;
    }
    if (!std::isfinite(svc.coupling_weight)) v.push_back(who + ": bad coupling weight");
    structure_ok = structure_ok && edges_ok;
  }
  for (const auto& f : spec.faults) {
    const auto idx = spec.topology.index_of(f.target);
    const auto who = "fault " + std::string(to_string(f.kind)) + " on " + to_string(f.target);
    if (!idx || *idx >= spec.services.size()) {
      v.push_back(who + ": target is not in the spec");
    } else {
      const auto& ms = spec.services[*idx].metrics;
      if (std::none_of(ms.begin(), ms.end(), [&](const MetricModel& m) { return m.name == f.metric; })) {
        v.push_back(who + ": unknown metric " + f.metric);
      }
    }
    if (!(f.start_tick >= 0 && f.start_tick < f.end_tick && f.end_tick <= spec.duration_ticks)) {
      v.push_back(who + ": need 0 <= start < end <= duration");
    }
    if (!(f.magnitude > 0.0) || !std::isfinite(f.magnitude)) {
      v.push_back(who + ": magnitude must be > 0");
    }
  }
  if (structure_ok && v.empty()) {
    const auto sys = build_system(spec);
    const auto n = static_cast<Eigen::Index>(sys.n);
    const Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(n, n) - sys.w).inverse();
    // Worst case over the dependency-slowdown multipliers the faults can apply.
    double worst = 1.0;
    for (const auto& f : spec.faults) {
      if (f.kind == FaultKind::kDependencySlowdown) worst = std::max(worst, 1.0 + f.magnitude);
    }
    if (spectral_radius(a * sys.c * worst) >= 1.0) {
      v.push_back("cross-service coupling is not stable");
    }
  }
  return v;
}

StationaryMoments stationary_moments(const SimSpec& spec) {
  require_valid(spec);
  const auto sys = build_system(spec);
  const auto m = compute_moments(sys);
  StationaryMoments out;
  for (std::size_t s = 0; s < spec.services.size(); ++s) {
    const auto& svc = spec.services[s];
    for (std::size_t j = 0; j < svc.metrics.size(); ++j) {
      const MetricKey key{svc.node.ip, svc.node.service, svc.metrics[j].name};
      const auto g = static_cast<Eigen::Index>(sys.offset[s] + j);
      out.mean[key] = m.mean(g);
      out.stddev[key] = m.sd(g);
    }
  }
  return out;
}

SimOutput simulate(const SimSpec& spec) {
  require_valid(spec);
  const auto sys = build_system(spec);
  const auto moments = compute_moments(sys);
  const auto n = sys.n;
  const auto ns = spec.services.size();

  SimOutput out;
  out.topology = spec.topology;
  std::vector<std::vector<int>> order(ns);
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> parents(ns);
  std::vector<std::size_t> iface(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto& svc = spec.services[s];
    order[s] = metric_order(svc);
    parents[s].resize(svc.metrics.size());
    MetricDependencyGraph truth;
    for (const auto& m : svc.metrics) truth.metrics.push_back(m.name);
    for (const auto& e : svc.edges) {
      const auto from = static_cast<std::size_t>(*truth.index_of(e.from));
      const auto to = static_cast<std::size_t>(*truth.index_of(e.to));
      parents[s][to].emplace_back(from, e.weight);
      truth.directed.insert({static_cast<int>(from), static_cast<int>(to)});
    }
    iface[s] = static_cast<std::size_t>(*truth.index_of(svc.interface_metric));
    out.truth_graphs.emplace(svc.node, std::move(truth));
  }
  std::vector<std::vector<std::size_t>> callees(ns);
  for (const auto& [caller, callee] : spec.topology.edges) callees[caller].push_back(callee);

  struct ActiveFault {
    const FaultEvent* event;
    std::size_t service;
    std::size_t global;
  };
  std::vector<ActiveFault> faults;
  for (const auto& f : spec.faults) {
    const auto s = *spec.topology.index_of(f.target);
    const auto j = static_cast<std::size_t>(*out.truth_graphs.at(f.target).index_of(f.metric));
    faults.push_back({&f, s, sys.offset[s] + j});
    out.labels.push_back({f.start_tick, f.end_tick, f.target, f.metric, f.kind});
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> e(n), x(n), prev(n), shift(n), extra(n);
  std::vector<double> innov(n);
  for (std::size_t g = 0; g < n; ++g) {
    const auto gi = static_cast<Eigen::Index>(g);
    innov[g] = std::sqrt(1.0 - sys.phi(gi) * sys.phi(gi)) * sys.noise(gi);
    e[g] = sys.noise(gi) * normal(rng);  // stationary start
    prev[g] = moments.mean(gi);
  }
  std::vector<double> coupling_mult(ns);
  std::vector<bool> down(ns, false);
  out.samples.reserve(static_cast<std::size_t>(spec.duration_ticks) * n);
  for (std::size_t s = 0; s < ns; ++s) {
    out.events.push_back({spec.start_ms, spec.services[s].node, UpDownState::kUp});
  }

  for (std::int64_t t = 0; t < spec.duration_ticks; ++t) {
    std::fill(shift.begin(), shift.end(), 0.0);
    std::fill(extra.begin(), extra.end(), 0.0);
    std::fill(coupling_mult.begin(), coupling_mult.end(), 1.0);
    for (const auto& af : faults) {
      const auto& f = *af.event;
      const bool active = f.kind == FaultKind::kConfigError
                              ? t >= f.start_tick
                              : (t >= f.start_tick && t < f.end_tick);
      if (!active) continue;
      const double sigma = moments.sd(static_cast<Eigen::Index>(af.global));
      switch (f.kind) {
        case FaultKind::kCpuHog:
        case FaultKind::kConfigError:
          shift[af.global] += f.magnitude * sigma;
          break;
        case FaultKind::kMemLeak:
          shift[af.global] += f.magnitude * sigma * static_cast<double>(t - f.start_tick) / 100.0;
          break;
        case FaultKind::kIoSaturation:
          extra[af.global] += (1.0 + f.magnitude) * (1.0 + f.magnitude) - 1.0;  // variance factor
          break;
        case FaultKind::kDependencySlowdown:
          shift[af.global] += f.magnitude * sigma;
          coupling_mult[af.service] *= 1.0 + f.magnitude;
          break;
      }
    }

    const TimestampMs ts = spec.start_ms + t * spec.tick_ms;
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& svc = spec.services[s];
      const auto base = sys.offset[s];
      for (std::size_t j = 0; j < svc.metrics.size(); ++j) {
        const auto g = base + j;
        e[g] = sys.phi(static_cast<Eigen::Index>(g)) * e[g] + innov[g] * normal(rng);
      }
      for (int jj : order[s]) {
        const auto j = static_cast<std::size_t>(jj);
        const auto g = base + j;
        double v = sys.b(static_cast<Eigen::Index>(g)) + shift[g] + e[g];
        for (const auto& [k, w] : parents[s][j]) v += w * x[base + k];
        if (j == iface[s]) {
          for (auto c : callees[s]) {
            v += svc.coupling_weight * coupling_mult[s] * prev[sys.offset[c] + iface[c]];
          }
        }
        if (extra[g] > 0.0) v += svc.metrics[j].noise * std::sqrt(extra[g]) * normal(rng);
        x[g] = v;
      }
    }

    for (std::size_t s = 0; s < ns; ++s) {
      const auto& svc = spec.services[s];
      bool is_down = false;
      for (std::size_t j = 0; j < svc.metrics.size(); ++j) {
        const auto g = sys.offset[s] + j;
        out.samples.push_back({ts, svc.node.ip, svc.node.service, svc.metrics[j].name, x[g]});
        const auto gi = static_cast<Eigen::Index>(g);
        if (std::fabs(x[g] - moments.mean(gi)) > 6.0 * moments.sd(gi)) is_down = true;
      }
      if (t > 0 && is_down != down[s]) {
        down[s] = is_down;
        out.events.push_back({ts, svc.node, is_down ? UpDownState::kDown : UpDownState::kUp});
      }
    }
    prev = x;
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const UpDownEvent& a, const UpDownEvent& b) { return a.ts_ms < b.ts_ms; });
  return out;
}

std::string serialize_label_line(const FaultLabel& label) {
  nlohmann::ordered_json j;
  j["tick_start"] = label.tick_start;
  j["tick_end"] = label.tick_end;
  j["ip"] = label.target.ip;
  j["service"] = label.target.service;
  j["metric"] = label.metric;
  j["kind"] = std::string(to_string(label.kind));
  return j.dump() + "\n";
}

void write_sim_output(const SimOutput& out, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto open = [&](const char* name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw Error(ErrorCode::kFileUnreadable,
                  "cannot write " + (fs::path(dir) / name).string());
    }
    return f;
  };
  {
    auto f = open("metrics.ndjson");
    for (const auto& s : out.samples) f << serialize_metric_line(s);
  }
  {
    auto f = open("labels.ndjson");
    for (const auto& l : out.labels) f << serialize_label_line(l);
  }
  {
    auto f = open("events.ndjson");
    for (const auto& e : out.events) f << serialize_event_line(e);
  }
  save_topology_file(out.topology, (fs::path(dir) / "topology.json").string());
  {
    auto f = open("truth_graphs.json");
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [node, g] : out.truth_graphs) j[to_string(node)] = g;
    f << j.dump(2) << "\n";
  }
}

SimSpec three_tier_spec(std::uint64_t seed, double ar, std::int64_t duration_ticks) {
  SimSpec spec;
  spec.seed = seed;
  spec.duration_ticks = duration_ticks;
  spec.topology.nodes = {{"10.0.0.1", "apache"}, {"10.0.0.2", "tomcat"}, {"10.0.0.3", "mysql"}};
  spec.topology.edges = {{0, 1}, {1, 2}};
  const double intercept_scale[] = {1.0, 0.8, 0.6};
  for (std::size_t s = 0; s < 3; ++s) {
    ServiceModel svc;
    svc.node = spec.topology.nodes[s];
    const double k = intercept_scale[s];
    svc.metrics = {
        {"request_rate", 100.0 * k, 10.0, ar},
        {"cpu_util", 20.0 * k, 3.0, ar},
        {"mem_used", 2000.0 * k, 25.0, ar},
        {"io_wait", 5.0 * k, 1.0, ar},
        {"latency_ms", 20.0 * k, 2.0, ar},
        {"conn_errors", 1.0, 0.3, ar},
    };
    svc.edges = {
        {"request_rate", "cpu_util", 0.25},
        {"request_rate", "io_wait", 0.06},
        {"request_rate", "mem_used", 1.5},
        {"cpu_util", "latency_ms", 0.5},
        {"io_wait", "latency_ms", 1.2},
        {"mem_used", "latency_ms", 0.05},
        {"conn_errors", "latency_ms", 4.0},
    };
    svc.interface_metric = "latency_ms";
    svc.coupling_weight = 0.3;
    spec.services.push_back(std::move(svc));
  }
  return spec;
}

SimSpec generate_random_spec(int n_services, int metrics_per_service, double expected_degree,
                             std::uint64_t seed) {
  if (metrics_per_service < 2) {
    throw Error(ErrorCode::kDegenerateSpec, "metrics_per_service must be >= 2");
  }
  if (n_services < 1) throw Error(ErrorCode::kInvalidArgument, "n_services must be >= 1");
  if (!(expected_degree >= 0.0) || !std::isfinite(expected_degree)) {
    throw Error(ErrorCode::kInvalidArgument, "expected_degree must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimSpec spec;
  spec.seed = seed;
  for (int i = 0; i < n_services; ++i) {
    spec.topology.nodes.push_back({"10.0.0." + std::to_string(i + 1), "svc" + std::to_string(i)});
    if (i > 0) {
      std::uniform_int_distribution<int> pick(0, i - 1);
      spec.topology.edges.emplace_back(static_cast<std::size_t>(pick(rng)),
                                       static_cast<std::size_t>(i));
    }
  }
  const double p = std::min(1.0, expected_degree / (metrics_per_service - 1));
  for (int i = 0; i < n_services; ++i) {
    ServiceModel svc;
    svc.node = spec.topology.nodes[static_cast<std::size_t>(i)];
    for (int m = 0; m < metrics_per_service; ++m) {
      svc.metrics.push_back({"m" + std::to_string(m), 0.0, 1.0, 0.0});
    }
    std::vector<int> perm(static_cast<std::size_t>(metrics_per_service));
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with our own draws so the order depends only on the engine.
    for (std::size_t k = perm.size() - 1; k > 0; --k) {
      std::uniform_int_distribution<std::size_t> pick(0, k);
      std::swap(perm[k], perm[pick(rng)]);
    }
    for (std::size_t a = 0; a < perm.size(); ++a) {
      for (std::size_t b = a + 1; b < perm.size(); ++b) {
        if (unit(rng) >= p) continue;
        const double magnitude = 0.5 + unit(rng);
        const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
        svc.edges.push_back({svc.metrics[static_cast<std::size_t>(perm[a])].name,
                             svc.metrics[static_cast<std::size_t>(perm[b])].name,
                             sign * magnitude});
      }
    }
    svc.interface_metric = svc.metrics[static_cast<std::size_t>(perm.back())].name;
    svc.coupling_weight = 0.5;
    spec.services.push_back(std::move(svc));
  }
  return spec;
}

void to_json(nlohmann::json& j, const FaultEvent& f) {
  j = {{"start_tick", f.start_tick},
       {"end_tick", f.end_tick},
       {"ip", f.target.ip},
       {"service", f.target.service},
       {"metric", f.metric},
       {"kind", std::string(to_string(f.kind))},
       {"magnitude", f.magnitude}};
}

void from_json(const nlohmann::json& j, FaultEvent& f) {
  f.start_tick = j.at("start_tick").get<std::int64_t>();
  f.end_tick = j.at("end_tick").get<std::int64_t>();
  f.target.ip = j.at("ip").get<std::string>();
  f.target.service = j.at("service").get<std::string>();
  f.metric = j.at("metric").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  const auto k = parse_fault_kind(kind);
  if (!k) throw Error(ErrorCode::kInvalidSpec, "unknown fault kind " + kind);
  f.kind = *k;
  f.magnitude = j.at("magnitude").get<double>();
}

void to_json(nlohmann::json& j, const SimSpec& spec) {
  auto services = nlohmann::json::array();
  for (const auto& svc : spec.services) {
    auto metrics = nlohmann::json::array();
    for (const auto& m : svc.metrics) {
      metrics.push_back({{"name", m.name}, {"intercept", m.intercept}, {"noise", m.noise},
                         {"ar", m.ar}});
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : svc.edges) {
      edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    }
    services.push_back({{"ip", svc.node.ip},
                        {"service", svc.node.service},
                        {"interface_metric", svc.interface_metric},
                        {"coupling_weight", svc.coupling_weight},
                        {"metrics", std::move(metrics)},
                        {"edges", std::move(edges)}});
  }
  j = {{"seed", spec.seed},
       {"tick_ms", spec.tick_ms},
       {"start_ms", spec.start_ms},
       {"duration_ticks", spec.duration_ticks},
       {"topology", spec.topology},
       {"services", std::move(services)},
       {"faults", spec.faults}};
}

void from_json(const nlohmann::json& j, SimSpec& spec) {
  spec = SimSpec{};
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.tick_ms = j.value("tick_ms", spec.tick_ms);
  spec.start_ms = j.value("start_ms", spec.start_ms);
  spec.duration_ticks = j.value("duration_ticks", spec.duration_ticks);
  spec.topology = j.at("topology").get<ServiceDependencyGraph>();
  std::vector<ServiceModel> parsed;
  for (const auto& s : j.at("services")) {
    ServiceModel svc;
    svc.node = {s.at("ip").get<std::string>(), s.at("service").get<std::string>()};
    svc.interface_metric = s.value("interface_metric", std::string());
    svc.coupling_weight = s.value("coupling_weight", svc.coupling_weight);
    for (const auto& m : s.at("metrics")) {
      svc.metrics.push_back({m.at("name").get<std::string>(), m.value("intercept", 0.0),
                             m.value("noise", 1.0), m.value("ar", 0.0)});
    }
    if (s.contains("edges")) {
      for (const auto& e : s.at("edges")) {
        svc.edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                             e.at("weight").get<double>()});
      }
    }
    if (svc.interface_metric.empty() && !svc.metrics.empty()) {
      svc.interface_metric = svc.metrics.back().name;
    }
    parsed.push_back(std::move(svc));
  }
  // Service models may be listed in any order; put them in topology order.
  for (const auto& node : spec.topology.nodes) {
    const auto it = std::find_if(parsed.begin(), parsed.end(),
                                 [&](const ServiceModel& m) { return m.node == node; });
    if (it != parsed.end()) spec.services.push_back(*it);
  }
  if (spec.services.size() != parsed.size()) spec.services = parsed;
  if (j.contains("faults")) spec.faults = j.at("faults").get<std::vector<FaultEvent>>();
}

SimSpec load_sim_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileUnreadable, "cannot read spec " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j.get<SimSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, "spec " + path + ": " + e.what());
  }
}

}  // namespace availscope
