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

// Slow, obviously-correct reference computations used by the unit and
// acceptance tests. Nothing here shares code with the library.

#ifndef AVAILSCOPE_TESTS_ORACLES_HPP_
#define AVAILSCOPE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

struct Counts {
  std::uint64_t b = 0;
  std::uint64_t a = 0;
};

// Every ordered pair of distinct templates starting in [0, N-m).
inline Counts sampen_counts(const std::vector<double>& x, int m, double r) {
  const std::size_t n = x.size() - static_cast<std::size_t>(m);
  Counts c;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = 0.0;
      for (int k = 0; k < m; ++k) d = std::max(d, std::fabs(x[i + k] - x[j + k]));
      if (d > r) continue;
      ++c.b;
      if (std::fabs(x[i + m] - x[j + m]) <= r) ++c.a;
    }
  }
  return c;
}

inline double pop_stddev(const std::vector<double>& x) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

// DAG as parent lists.
struct Dag {
  int n = 0;
  std::vector<std::vector<int>> parents;
  std::vector<std::vector<double>> weights;  // parallel to parents

  bool has_edge(int from, int to) const {
    const auto& p = parents[static_cast<std::size_t>(to)];
    return std::find(p.begin(), p.end(), from) != p.end();
  }
  bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }
};

// Erdos-Renyi DAG over a random causal order.
inline Dag random_dag(int n, double edge_prob, std::mt19937_64& rng) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dag g;
  g.n = n;
  g.parents.resize(static_cast<std::size_t>(n));
  g.weights.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (u(rng) >= edge_prob) continue;
      const auto child = static_cast<std::size_t>(order[static_cast<std::size_t>(b)]);
      g.parents[child].push_back(order[static_cast<std::size_t>(a)]);
      const double w = 0.5 + u(rng);
      g.weights[child].push_back(u(rng) < 0.5 ? -w : w);
    }
  }
  return g;
}

// d-separation through the moralized ancestral graph.
inline bool d_separated(const Dag& g, int x, int y, const std::vector<int>& z) {
  const auto n = static_cast<std::size_t>(g.n);
  std::vector<bool> anc(n, false);
  std::vector<int> stack{x, y};
  stack.insert(stack.end(), z.begin(), z.end());
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (anc[static_cast<std::size_t>(v)]) continue;
    anc[static_cast<std::size_t>(v)] = true;
    for (int p : g.parents[static_cast<std::size_t>(v)]) stack.push_back(p);
  }
  std::vector<std::set<int>> und(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!anc[v]) continue;
    const auto& ps = g.parents[v];
    for (int p : ps) {
      und[v].insert(p);
      und[static_cast<std::size_t>(p)].insert(static_cast<int>(v));
    }
    for (std::size_t a = 0; a < ps.size(); ++a) {
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        und[static_cast<std::size_t>(ps[a])].insert(ps[b]);
        und[static_cast<std::size_t>(ps[b])].insert(ps[a]);
      }
    }
  }
  std::vector<bool> blocked(n, false);
  for (int v : z) blocked[static_cast<std::size_t>(v)] = true;
  std::vector<bool> seen(n, false);
  stack = {x};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == y) return false;
    if (seen[static_cast<std::size_t>(v)]) continue;
    seen[static_cast<std::size_t>(v)] = true;
    for (int w : und[static_cast<std::size_t>(v)]) {
      if (!blocked[static_cast<std::size_t>(w)] && !seen[static_cast<std::size_t>(w)]) {
        stack.push_back(w);
      }
    }
  }
  return true;
}

struct Pdag {
  std::set<std::pair<int, int>> directed;
  std::set<std::pair<int, int>> undirected;  // first < second

  bool operator==(const Pdag&) const = default;
};

namespace detail {

using Edges = std::vector<std::pair<int, int>>;

inline bool acyclic(int n, const Edges& e) {
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (const auto& [a, b] : e) ++indeg[static_cast<std::size_t>(b)];
  std::vector<int> ready;
  for (int v = 0; v < n; ++v) {
    if (indeg[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  }
  int seen = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++seen;
    for (const auto& [a, b] : e) {
      if (a == v && --indeg[static_cast<std::size_t>(b)] == 0) ready.push_back(b);
    }
  }
  return seen == n;
}

inline std::set<std::tuple<int, int, int>> v_structures(int n, const Edges& e) {
  std::set<std::pair<int, int>> adj;
  for (const auto& [a, b] : e) {
    adj.insert({a, b});
    adj.insert({b, a});
  }
  std::set<std::tuple<int, int, int>> out;
  for (int k = 0; k < n; ++k) {
    std::vector<int> ps;
    for (const auto& [a, b] : e) {
      if (b == k) ps.push_back(a);
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t j = 0; j < ps.size(); ++j) {
        if (ps[i] < ps[j] && !adj.count({ps[i], ps[j]})) out.insert({ps[i], k, ps[j]});
      }
    }
  }
  return out;
}

}  // namespace detail

// CPDAG by brute force: enumerate every acyclic orientation of the
// skeleton with the same v-structures; an edge is directed iff all of them
// agree on its direction.
inline Pdag true_cpdag(const Dag& g) {
  detail::Edges truth;
  for (int v = 0; v < g.n; ++v) {
    for (int p : g.parents[static_cast<std::size_t>(v)]) truth.push_back({p, v});
  }
  const auto target_v = detail::v_structures(g.n, truth);
  const std::size_t m = truth.size();
  std::vector<int> forward(m, 0), backward(m, 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    detail::Edges e;
    for (std::size_t i = 0; i < m; ++i) {
      const auto [a, b] = truth[i];
      if (mask >> i & 1U) {
        e.push_back({b, a});
      } else {
        e.push_back({a, b});
      }
    }
    if (!detail::acyclic(g.n, e) || detail::v_structures(g.n, e) != target_v) continue;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask >> i & 1U) {
        ++backward[i];
      } else {
        ++forward[i];
      }
    }
  }
  Pdag out;
  for (std::size_t i = 0; i < m; ++i) {
    const auto [a, b] = truth[i];
    if (backward[i] == 0) {
      out.directed.insert({a, b});
    } else if (forward[i] == 0) {
      out.directed.insert({b, a});
    } else {
      out.undirected.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return out;
}

// Linear-Gaussian samples; returns column-major data.
inline std::vector<std::vector<double>> sample_linear_gaussian(const Dag& g, std::size_t rows,
                                                               std::mt19937_64& rng) {
  std::vector<int> order;
  std::vector<bool> placed(static_cast<std::size_t>(g.n), false);
  while (static_cast<int>(order.size()) < g.n) {
    for (int v = 0; v < g.n; ++v) {
      if (placed[static_cast<std::size_t>(v)]) continue;
      const auto& ps = g.parents[static_cast<std::size_t>(v)];
      if (std::all_of(ps.begin(), ps.end(),
                      [&](int p) { return placed[static_cast<std::size_t>(p)]; })) {
        placed[static_cast<std::size_t>(v)] = true;
        order.push_back(v);
      }
    }
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(g.n),
                                        std::vector<double>(rows));
  for (std::size_t t = 0; t < rows; ++t) {
    for (int v : order) {
      const auto vu = static_cast<std::size_t>(v);
      double x = noise(rng);
      for (std::size_t k = 0; k < g.parents[vu].size(); ++k) {
        x += g.weights[vu][k] * cols[static_cast<std::size_t>(g.parents[vu][k])][t];
      }
      cols[vu][t] = x;
    }
  }
  return cols;
}

// F1 of two undirected edge sets.
inline double f1(const std::set<std::pair<int, int>>& truth,
                 const std::set<std::pair<int, int>>& found) {
  if (truth.empty() && found.empty()) return 1.0;
  std::size_t tp = 0;
  for (const auto& e : found) tp += truth.count(e);
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(found.size());
  const double recall = static_cast<double>(tp) / static_cast<double>(truth.size());
  return 2.0 * precision * recall / (precision + recall);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("availscope-" + tag + "-" + std::to_string(rng() % 1000000000));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle

#endif  // AVAILSCOPE_TESTS_ORACLES_HPP_
