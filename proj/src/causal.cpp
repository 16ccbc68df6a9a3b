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

#include "availscope/causal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "availscope/error.hpp"

namespace availscope {

namespace {

constexpr double kSingularTolerance = 1e-10;

bool is_degenerate(const std::vector<double>& column) {
  if (column.empty()) return true;
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  return *lo == *hi;
}

struct Prepared {
  std::vector<std::size_t> kept;     // indices into data.columns
  std::vector<std::size_t> dropped;
  std::vector<std::vector<double>> columns;  // kept columns, complete rows
  std::size_t rows = 0;
};

Prepared prepare(const MetricMatrix& data) {
  Prepared p;
  auto cols = data.complete_columns();
  p.rows = cols.empty() ? 0 : cols.front().size();
  if (p.rows < 2) {
    throw Error(ErrorCode::kInsufficientRows,
                "need at least 2 complete rows, have " + std::to_string(p.rows));
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (is_degenerate(cols[c])) {
      p.dropped.push_back(c);
    } else {
      p.kept.push_back(c);
      p.columns.push_back(std::move(cols[c]));
    }
  }
  if (p.kept.empty()) {
    throw Error(ErrorCode::kAllColumnsDegenerate, "every column has zero variance");
  }
  return p;
}

// Enumerates size-k subsets of `items` in lexicographic order; stops early
// when the visitor returns true.
template <typename Visitor>
bool for_each_subset(const std::vector<int>& items, int k, Visitor&& visit) {
  const int n = static_cast<int>(items.size());
  if (k > n) return false;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> subset(static_cast<std::size_t>(k));
  while (true) {
    for (int t = 0; t < k; ++t) {
      subset[static_cast<std::size_t>(t)] = items[static_cast<std::size_t>(idx[static_cast<std::size_t>(t)])];
    }
    if (visit(std::span<const int>(subset))) return true;
    int t = k - 1;
    while (t >= 0 && idx[static_cast<std::size_t>(t)] == n - k + t) --t;
    if (t < 0) return false;
    ++idx[static_cast<std::size_t>(t)];
    for (int u = t + 1; u < k; ++u) {
      idx[static_cast<std::size_t>(u)] = idx[static_cast<std::size_t>(u - 1)] + 1;
    }
  }
}

bool has_directed_path(const MetricDependencyGraph& g, int from, int to) {
  std::vector<bool> seen(static_cast<std::size_t>(g.size()), false);
  std::vector<int> stack{from};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (seen[static_cast<std::size_t>(v)]) continue;
    seen[static_cast<std::size_t>(v)] = true;
    for (const auto& [a, b] : g.directed) {
      if (a == v && !seen[static_cast<std::size_t>(b)]) stack.push_back(b);
    }
  }
  return false;
}

}  // namespace

void PCConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidConfig, "alpha must be in (0,1)");
  if (max_cond < 0) throw Error(ErrorCode::kInvalidConfig, "max_cond must be >= 0");
  if (min_rows < 1) throw Error(ErrorCode::kInvalidConfig, "min_rows must be >= 1");
}

Eigen::MatrixXd correlation_of_columns(const std::vector<std::vector<double>>& columns,
                                       bool standardize) {
  const auto k = static_cast<Eigen::Index>(columns.size());
  const auto n = static_cast<Eigen::Index>(columns.empty() ? 0 : columns.front().size());
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto& col = columns[static_cast<std::size_t>(c)];
    const double mu = mean(col);
    const double sd = stddev(col);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double centered = col[static_cast<std::size_t>(r)] - mu;
      x(r, c) = standardize ? centered / sd : centered;
    }
  }
  Eigen::MatrixXd corr = (x.transpose() * x) / static_cast<double>(n);
  if (!standardize) {
    const Eigen::VectorXd sd = corr.diagonal().cwiseSqrt();
    corr = sd.cwiseInverse().asDiagonal() * corr * sd.cwiseInverse().asDiagonal();
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      corr(a, b) = a == b ? 1.0 : std::clamp(corr(a, b), -1.0, 1.0);
    }
  }
  // exact symmetry regardless of summation order
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) corr(b, a) = corr(a, b);
  }
  return corr;
}

CorrelationResult correlation_matrix(const MetricMatrix& data, bool standardize) {
  const auto p = prepare(data);
  CorrelationResult out;
  for (auto c : p.kept) out.columns.push_back(data.columns[c]);
  for (auto c : p.dropped) out.dropped.push_back(data.columns[c]);
  out.rows = p.rows;
  out.corr = correlation_of_columns(p.columns, standardize);
  return out;
}

double partial_correlation(const Eigen::MatrixXd& corr, int i, int j, std::span<const int> cond) {
  if (i == j) throw Error(ErrorCode::kInvalidArgument, "partial correlation needs i != j");
  for (int k : cond) {
    if (k == i || k == j) {
      throw Error(ErrorCode::kInvalidArgument, "conditioning set must exclude i and j");
    }
  }
  if (cond.empty()) return corr(i, j);

  if (cond.size() == 1) {
    const int k = cond[0];
    const double rij = corr(i, j), rik = corr(i, k), rjk = corr(j, k);
    const double denom = (1.0 - rik * rik) * (1.0 - rjk * rjk);
    if (!(denom > kSingularTolerance)) {
      throw Error(ErrorCode::kSingularSubmatrix, "conditioning variable is collinear");
    }
    return std::clamp((rij - rik * rjk) / std::sqrt(denom), -1.0, 1.0);
  }

  std::vector<int> idx{i, j};
  idx.insert(idx.end(), cond.begin(), cond.end());
  const auto d = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd sub(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      sub(a, b) = corr(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
  lu.setThreshold(kSingularTolerance);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingularSubmatrix, "conditioning submatrix is singular");
  }
  const Eigen::MatrixXd omega = lu.inverse();
  const double denom = omega(0, 0) * omega(1, 1);
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kSingularSubmatrix, "precision matrix is not positive definite");
  }
  return std::clamp(-omega(0, 1) / std::sqrt(denom), -1.0, 1.0);
}

FisherZResult fisher_z_test(double rho, std::size_t n, std::size_t s, double alpha) {
  if (n < s + 4) {
    throw Error(ErrorCode::kTooFewSamples, "Fisher-z needs n - s - 3 >= 1");
  }
  FisherZResult out;
  if (std::fabs(rho) >= 1.0) {
    out.statistic = std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
    out.independent = false;
    return out;
  }
  const double z = 0.5 * std::log((1.0 + rho) / (1.0 - rho));
  out.statistic = std::sqrt(static_cast<double>(n - s - 3)) * std::fabs(z);
  // 2 * (1 - Phi(stat)) computed without cancellation
  out.p_value = std::erfc(out.statistic / std::sqrt(2.0));
  out.independent = out.p_value > alpha;
  return out;
}

CiOutcome GaussianCiTest::operator()(int i, int j, std::span<const int> cond) const {
  double rho = 0.0;
  try {
    rho = partial_correlation(corr_, i, j, cond);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSingularSubmatrix) return {false, 0.0};
    throw;
  }
  const auto r = fisher_z_test(rho, n_, cond.size(), alpha_);
  return {r.independent, r.p_value};
}

const std::vector<int>* SkeletonResult::sepset(int a, int b) const {
  const auto it = sepsets.find({std::min(a, b), std::max(a, b)});
  return it == sepsets.end() ? nullptr : &it->second;
}

SkeletonResult pc_skeleton(int num_vars, const CiTest& ci, int max_cond) {
  SkeletonResult out;
  out.num_vars = num_vars;
  const auto n = static_cast<std::size_t>(num_vars);
  out.adjacency.assign(n, std::vector<bool>(n, true));
  for (std::size_t i = 0; i < n; ++i) out.adjacency[i][i] = false;

  for (int level = 0; level <= max_cond; ++level) {
    std::vector<std::vector<int>> frozen(n);
    std::size_t max_degree = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (out.adjacency[i][j]) frozen[i].push_back(static_cast<int>(j));
      }
      max_degree = std::max(max_degree, frozen[i].size());
    }
    if (max_degree < static_cast<std::size_t>(level) + 1) break;

    for (std::size_t i = 0; i < n; ++i) {
      for (int j : frozen[i]) {
        const auto ju = static_cast<std::size_t>(j);
        if (!out.adjacency[i][ju]) continue;  // removed from the other side
        std::vector<int> candidates;
        for (int k : frozen[i]) {
          if (k != j) candidates.push_back(k);
        }
        if (candidates.size() < static_cast<std::size_t>(level)) continue;
        for_each_subset(candidates, level, [&](std::span<const int> cond) {
          ++out.tests_run;
          if (!ci(static_cast<int>(i), j, cond).independent) return false;
          out.adjacency[i][ju] = out.adjacency[ju][i] = false;
          out.sepsets[{std::min(static_cast<int>(i), j), std::max(static_cast<int>(i), j)}] =
              std::vector<int>(cond.begin(), cond.end());
          return true;
        });
      }
    }
  }
  return out;
}

SkeletonResult pc_skeleton(const MetricMatrix& data, const PCConfig& cfg) {
  cfg.validate();
  const auto p = prepare(data);
  if (p.rows < cfg.min_rows) {
    throw Error(ErrorCode::kInsufficientRows, "PC needs " + std::to_string(cfg.min_rows) +
                                                  " complete rows, have " + std::to_string(p.rows));
  }
  const GaussianCiTest ci(correlation_of_columns(p.columns, cfg.standardize), p.rows, cfg.alpha);
  return pc_skeleton(static_cast<int>(p.kept.size()), std::cref(ci), cfg.max_cond);
}

OrientationResult orient_v_structures(const SkeletonResult& skel,
                                      std::vector<std::string> metric_names) {
  const int n = skel.num_vars;
  OrientationResult out;
  out.graph.metrics = std::move(metric_names);
  out.graph.metrics.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (skel.adjacent(a, b)) out.graph.add_undirected(a, b);
    }
  }

  // Collect every requested arrowhead before applying any, so the result
  // does not depend on triple order.
  std::set<std::pair<int, int>> wanted;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (skel.adjacent(i, j)) continue;
      const auto* sep = skel.sepset(i, j);
      for (int k = 0; k < n; ++k) {
        if (k == i || k == j || !skel.adjacent(i, k) || !skel.adjacent(j, k)) continue;
        if (sep && std::find(sep->begin(), sep->end(), k) != sep->end()) continue;
        wanted.insert({i, k});
        wanted.insert({j, k});
      }
    }
  }
  std::set<std::pair<int, int>> conflicted;
  for (const auto& [from, to] : wanted) {
    if (wanted.count({to, from})) conflicted.insert({std::min(from, to), std::max(from, to)});
  }
  for (const auto& [from, to] : wanted) {
    const std::pair<int, int> edge{std::min(from, to), std::max(from, to)};
    if (conflicted.count(edge)) continue;
    if (has_directed_path(out.graph, to, from)) {
      conflicted.insert(edge);
      continue;
    }
    out.graph.orient(from, to);
  }
  out.conflicts.assign(conflicted.begin(), conflicted.end());
  return out;
}

namespace {

bool creates_new_v_structure(const MetricDependencyGraph& g, int from, int to) {
  for (const auto& [a, b] : g.directed) {
    if (b == to && a != from && !g.adjacent(a, from)) return true;
  }
  return false;
}

bool rule1(const MetricDependencyGraph& g, int a, int b) {
  for (const auto& [c, d] : g.directed) {
    if (d == a && c != b && !g.adjacent(c, b)) return true;
  }
  return false;
}

bool rule2(const MetricDependencyGraph& g, int a, int b) {
  for (const auto& [x, c] : g.directed) {
    if (x == a && g.has_directed(c, b)) return true;
  }
  return false;
}

bool rule3(const MetricDependencyGraph& g, int a, int b) {
  std::vector<int> spouses;
  for (int c = 0; c < g.size(); ++c) {
    if (c != a && c != b && g.has_undirected(a, c) && g.has_directed(c, b)) spouses.push_back(c);
  }
  for (std::size_t x = 0; x < spouses.size(); ++x) {
    for (std::size_t y = x + 1; y < spouses.size(); ++y) {
      if (!g.adjacent(spouses[x], spouses[y])) return true;
    }
  }
  return false;
}

}  // namespace

MetricDependencyGraph meek_closure(MetricDependencyGraph pdag) {
  bool changed = true;
  while (changed) {
    changed = false;
    const std::vector<std::pair<int, int>> undirected(pdag.undirected.begin(),
                                                      pdag.undirected.end());
    for (const auto& [u, v] : undirected) {
      for (const auto& [from, to] : {std::pair{u, v}, std::pair{v, u}}) {
        if (!pdag.has_undirected(from, to)) break;
        if (!(rule1(pdag, from, to) || rule2(pdag, from, to) || rule3(pdag, from, to))) continue;
        if (has_directed_path(pdag, to, from) || creates_new_v_structure(pdag, from, to)) continue;
        pdag.orient(from, to);
        changed = true;
        break;
      }
    }
  }
  return pdag;
}

std::vector<std::string> metric_labels(const std::vector<MetricKey>& keys) {
  const bool single_service =
      std::all_of(keys.begin(), keys.end(), [&](const MetricKey& k) {
        return k.ip == keys.front().ip && k.service == keys.front().service;
      });
  std::vector<std::string> out;
  out.reserve(keys.size());
  for (const auto& k : keys) {
    out.push_back(single_service ? k.metric : k.ip + ":" + k.service + ":" + k.metric);
  }
  return out;
}

LearnedGraph learn_metric_graph(const MetricMatrix& data, const PCConfig& cfg) {
  cfg.validate();
  const auto p = prepare(data);
  LearnedGraph out;
  const auto all_labels = metric_labels(data.columns);
  for (auto c : p.dropped) out.dropped.push_back(all_labels[c]);
  if (p.rows < cfg.min_rows) {
    throw Error(ErrorCode::kInsufficientRows, "PC needs " + std::to_string(cfg.min_rows) +
                                                  " complete rows, have " + std::to_string(p.rows));
  }
  out.rows_used = p.rows;

  const auto k = p.kept.size();
  std::vector<std::string> labels;
  for (auto c : p.kept) labels.push_back(all_labels[c]);

  // canonical processing order: by label, then by input position
  std::vector<std::size_t> canon(k);
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::stable_sort(canon.begin(), canon.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  std::vector<std::vector<double>> columns;
  std::vector<std::string> canon_labels;
  for (auto idx : canon) {
    columns.push_back(p.columns[idx]);
    canon_labels.push_back(labels[idx]);
  }
  const GaussianCiTest ci(correlation_of_columns(columns, cfg.standardize), p.rows, cfg.alpha);
  const auto skel = pc_skeleton(static_cast<int>(k), std::cref(ci), cfg.max_cond);
  out.tests_run = skel.tests_run;
  auto oriented = orient_v_structures(skel, canon_labels);
  const auto cpdag = meek_closure(std::move(oriented.graph));

  out.graph.metrics = labels;
  auto to_input = [&](int c) { return static_cast<int>(canon[static_cast<std::size_t>(c)]); };
  for (const auto& [a, b] : cpdag.directed) out.graph.directed.insert({to_input(a), to_input(b)});
  for (const auto& [a, b] : cpdag.undirected) out.graph.add_undirected(to_input(a), to_input(b));
  for (const auto& [a, b] : oriented.conflicts) {
    out.conflicts.emplace_back(canon_labels[static_cast<std::size_t>(a)],
                               canon_labels[static_cast<std::size_t>(b)]);
  }
  return out;
}

void to_json(nlohmann::json& j, const PCConfig& cfg) {
  j = {{"alpha", cfg.alpha},
       {"max_cond", cfg.max_cond},
       {"standardize", cfg.standardize},
       {"min_rows", cfg.min_rows}};
}

void from_json(const nlohmann::json& j, PCConfig& cfg) {
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.max_cond = j.value("max_cond", cfg.max_cond);
  cfg.standardize = j.value("standardize", cfg.standardize);
  cfg.min_rows = j.value("min_rows", cfg.min_rows);
}

void to_json(nlohmann::json& j, const LearnedGraph& learned) {
  j = learned.graph;
  auto conflicts = nlohmann::json::array();
  for (const auto& [a, b] : learned.conflicts) conflicts.push_back({a, b});
  j["provenance"] = {{"dropped", learned.dropped},
                     {"conflicts", std::move(conflicts)},
                     {"rows_used", learned.rows_used},
                     {"tests_run", learned.tests_run}};
}

}  // namespace availscope
