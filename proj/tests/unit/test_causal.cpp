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

#include <cmath>
#include <cstdlib>
#include <random>

#include "availscope/causal.hpp"
#include "availscope/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace availscope;

namespace {

MetricMatrix matrix_of(const std::vector<std::vector<double>>& cols,
                       const std::vector<std::string>& names) {
  MetricMatrix m;
  for (const auto& n : names) m.columns.push_back({"10.0.0.1", "svc", n});
  m.rows.resize(cols.front().size());
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    for (const auto& c : cols) m.rows[r].push_back(c[r]);
  }
  return m;
}

std::vector<std::vector<double>> chain_data(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> c(3, std::vector<double>(n));
  for (std::size_t t = 0; t < n; ++t) {
    c[0][t] = g(rng);
    c[1][t] = 0.8 * c[0][t] + g(rng);
    c[2][t] = 0.8 * c[1][t] + g(rng);
  }
  return c;
}

std::vector<std::vector<double>> collider_data(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> c(3, std::vector<double>(n));
  for (std::size_t t = 0; t < n; ++t) {
    c[0][t] = g(rng);
    c[1][t] = g(rng);
    c[2][t] = 0.8 * c[0][t] + 0.8 * c[1][t] + g(rng);
  }
  return c;
}

CiTest dsep_ci(const oracle::Dag& dag) {
  return [&dag](int i, int j, std::span<const int> cond) {
    const bool ind = oracle::d_separated(dag, i, j, {cond.begin(), cond.end()});
    return CiOutcome{ind, ind ? 1.0 : 0.0};
  };
}

}  // namespace

TEST_CASE("correlation matrix") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(10000), y(10000), neg(10000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = g(rng);
    neg[i] = -x[i];
  }
  const auto res = correlation_matrix(matrix_of({x, y, neg}, {"x", "y", "neg"}));
  CHECK(res.corr(0, 0) == 1.0);
  CHECK(res.corr(0, 2) == doctest::Approx(-1.0));
  CHECK(std::fabs(res.corr(0, 1)) < 0.05);
  CHECK(res.corr(1, 0) == res.corr(0, 1));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(std::fabs(res.corr(i, j)) <= 1.0);
  }

  const std::vector<double> flat(10000, 3.0);
  const auto dropped = correlation_matrix(matrix_of({x, flat}, {"x", "flat"}));
  CHECK(dropped.dropped.size() == 1);
  CHECK(dropped.columns.size() == 1);

  try {
    correlation_matrix(matrix_of({flat, flat}, {"a", "b"}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAllColumnsDegenerate);
  }
  try {
    correlation_matrix(matrix_of({{1.0}, {2.0}}, {"a", "b"}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientRows);
  }
}

TEST_CASE("partial correlation") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  const std::vector<int> s2{2, 3};
  CHECK(partial_correlation(id, 0, 1, {}) == 0.0);
  CHECK(partial_correlation(id, 0, 1, s2) == doctest::Approx(0.0));

  Eigen::MatrixXd c(3, 3);
  c << 1.0, 0.48, 0.8, 0.48, 1.0, 0.6, 0.8, 0.6, 1.0;
  const std::vector<int> k{2};
  CHECK(std::fabs(partial_correlation(c, 0, 1, k)) < 1e-15);
  CHECK(partial_correlation(c, 0, 1, {}) == 0.48);

  Eigen::MatrixXd d(3, 3);
  d << 1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0;
  CHECK(partial_correlation(d, 0, 1, k) == doctest::Approx(0.5));

  // the |S| >= 2 path agrees with the recursive formula
  std::srand(4);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(6, 4);
    Eigen::MatrixXd cov = a.transpose() * a + 0.1 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    Eigen::MatrixXd corr = cov.array() / (sd * sd.transpose()).array();
    const std::vector<int> two{2, 3};
    const Eigen::MatrixXd prec = corr.inverse();
    const double expect = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
    CHECK(partial_correlation(corr, 0, 1, two) == doctest::Approx(expect).epsilon(1e-9));
    const std::vector<int> one{2};
    const double r01 = corr(0, 1), r02 = corr(0, 2), r12 = corr(1, 2);
    CHECK(partial_correlation(corr, 0, 1, one) ==
          doctest::Approx((r01 - r02 * r12) / std::sqrt((1 - r02 * r02) * (1 - r12 * r12))));
  }

  Eigen::MatrixXd sing(4, 4);
  sing << 1, 0.2, 0.5, 0.5, 0.2, 1, 0.3, 0.3, 0.5, 0.3, 1, 1, 0.5, 0.3, 1, 1;
  try {
    partial_correlation(sing, 0, 1, s2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingularSubmatrix);
  }
}

TEST_CASE("fisher z test") {
  auto r = fisher_z_test(0.0, 100, 0, 0.99);
  CHECK(r.p_value == 1.0);
  CHECK(r.independent);

  r = fisher_z_test(0.9, 100, 0, 0.01);
  CHECK(r.statistic == doctest::Approx(std::sqrt(97.0) * 0.5 * std::log(19.0)).epsilon(1e-12));
  CHECK(r.statistic == doctest::Approx(14.50).epsilon(1e-3));
  CHECK_FALSE(r.independent);
  CHECK(r.p_value < 1e-12);

  r = fisher_z_test(0.1, 20, 5, 0.05);
  CHECK(r.statistic == doctest::Approx(0.3476).epsilon(1e-3));
  CHECK(r.independent);

  r = fisher_z_test(1.0, 100, 0, 0.05);
  CHECK_FALSE(r.independent);
  CHECK(r.p_value == 0.0);

  CHECK_THROWS_AS(fisher_z_test(0.1, 5, 2, 0.05), Error);

  // p is non-increasing in |rho|
  for (int s = 0; s < 4; ++s) {
    double prev = 2.0;
    for (int k = 0; k <= 100; ++k) {
      const double p = fisher_z_test(k / 100.0, 50, static_cast<std::size_t>(s), 0.05).p_value;
      CHECK(p <= prev);
      prev = p;
    }
  }
}

TEST_CASE("skeleton from sampled data") {
  PCConfig cfg;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(5000), b(5000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = g(rng);
    b[i] = g(rng);
  }
  auto skel = pc_skeleton(matrix_of({a, b}, {"a", "b"}), cfg);
  CHECK_FALSE(skel.adjacent(0, 1));

  skel = pc_skeleton(matrix_of(chain_data(3, 5000), {"x", "y", "z"}), cfg);
  CHECK(skel.adjacent(0, 1));
  CHECK(skel.adjacent(1, 2));
  CHECK_FALSE(skel.adjacent(0, 2));
  REQUIRE(skel.sepset(0, 2) != nullptr);
  CHECK(*skel.sepset(0, 2) == std::vector<int>{1});

  skel = pc_skeleton(matrix_of(collider_data(4, 5000), {"x", "y", "z"}), cfg);
  CHECK(skel.adjacent(0, 2));
  CHECK(skel.adjacent(1, 2));
  CHECK_FALSE(skel.adjacent(0, 1));
  REQUIRE(skel.sepset(0, 1) != nullptr);
  CHECK(skel.sepset(0, 1)->empty());

  cfg.min_rows = 6000;
  CHECK_THROWS_AS(pc_skeleton(matrix_of({a, b}, {"a", "b"}), cfg), Error);
}

TEST_CASE("v-structures and conflicts") {
  SkeletonResult s;
  s.num_vars = 3;
  s.adjacency = {{false, false, true}, {false, false, true}, {true, true, false}};
  s.sepsets[{0, 1}] = {};
  auto o = orient_v_structures(s, {"x", "y", "z"});
  CHECK(o.graph.has_directed(0, 2));
  CHECK(o.graph.has_directed(1, 2));
  CHECK(o.conflicts.empty());

  s.adjacency = {{false, true, false}, {true, false, true}, {false, true, false}};
  s.sepsets.clear();
  s.sepsets[{0, 2}] = {1};
  o = orient_v_structures(s, {"x", "y", "z"});
  CHECK(o.graph.directed.empty());
  CHECK(o.graph.undirected.size() == 2);

  // a - b - c - d path, with a,c and b,d both separated by the empty set:
  // triple a-b-c orients b<-c, triple b-c-d orients b->c
  s.num_vars = 4;
  s.adjacency.assign(4, std::vector<bool>(4, false));
  auto link = [&](int u, int v) {
    s.adjacency[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = true;
    s.adjacency[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = true;
  };
  link(0, 1);
  link(1, 2);
  link(2, 3);
  s.sepsets = {{{0, 2}, {}}, {{1, 3}, {}}, {{0, 3}, {}}};
  o = orient_v_structures(s, {"a", "b", "c", "d"});
  CHECK(o.graph.has_undirected(1, 2));
  REQUIRE(o.conflicts.size() == 1);
  CHECK(o.conflicts[0] == std::pair<int, int>{1, 2});
  CHECK(o.graph.has_directed(0, 1));
  CHECK(o.graph.has_directed(3, 2));
}

TEST_CASE("meek rules") {
  MetricDependencyGraph g;
  g.metrics = {"x", "z", "w"};
  g.orient(0, 1);
  g.add_undirected(1, 2);
  auto c = meek_closure(g);
  CHECK(c.has_directed(1, 2));

  MetricDependencyGraph tri;
  tri.metrics = {"a", "b", "c"};
  tri.add_undirected(0, 1);
  tri.add_undirected(1, 2);
  tri.add_undirected(0, 2);
  CHECK(meek_closure(tri) == tri);

  // R2: a->b->c, a-c gives a->c
  MetricDependencyGraph r2;
  r2.metrics = {"a", "b", "c"};
  r2.orient(0, 1);
  r2.orient(1, 2);
  r2.add_undirected(0, 2);
  CHECK(meek_closure(r2).has_directed(0, 2));

  // R3: a-b, a-c, a-d, c->b, d->b, c,d non-adjacent gives a->b
  MetricDependencyGraph r3;
  r3.metrics = {"a", "b", "c", "d"};
  r3.add_undirected(0, 1);
  r3.add_undirected(0, 2);
  r3.add_undirected(0, 3);
  r3.orient(2, 1);
  r3.orient(3, 1);
  const auto c3 = meek_closure(r3);
  CHECK(c3.has_directed(0, 1));
  CHECK(c3.has_undirected(0, 2));
}

TEST_CASE("d-separation oracle gives the true CPDAG") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 4;
    const auto dag = oracle::random_dag(n, 0.5, rng);
    const auto skel = pc_skeleton(n, dsep_ci(dag), n - 2);
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) CHECK(skel.adjacent(a, b) == dag.adjacent(a, b));
    }
    std::vector<std::string> names;
    for (int v = 0; v < n; ++v) names.push_back("v" + std::to_string(v));
    auto o = orient_v_structures(skel, names);
    CHECK(o.conflicts.empty());
    const auto cpdag = meek_closure(std::move(o.graph));
    const auto truth = oracle::true_cpdag(dag);
    CHECK(cpdag.directed == truth.directed);
    CHECK(cpdag.undirected == truth.undirected);
    CHECK(directed_part_acyclic(cpdag));
  }
}

TEST_CASE("learn metric graph") {
  PCConfig cfg;
  auto chain = learn_metric_graph(matrix_of(chain_data(8, 5000), {"x", "y", "z"}), cfg);
  CHECK(chain.graph.directed.empty());
  CHECK(chain.graph.has_undirected(0, 1));
  CHECK(chain.graph.has_undirected(1, 2));
  CHECK_FALSE(chain.graph.adjacent(0, 2));

  auto coll = learn_metric_graph(matrix_of(collider_data(9, 5000), {"x", "y", "z"}), cfg);
  CHECK(coll.graph.has_directed(0, 2));
  CHECK(coll.graph.has_directed(1, 2));
  CHECK(coll.graph.undirected.empty());

  const std::vector<double> flat(5000, 1.0);
  auto cols = chain_data(8, 5000);
  cols.push_back(flat);
  const auto with_flat = learn_metric_graph(matrix_of(cols, {"x", "y", "z", "flat"}), cfg);
  CHECK(with_flat.dropped == std::vector<std::string>{"flat"});
  CHECK(with_flat.graph.metrics == std::vector<std::string>{"x", "y", "z"});

  try {
    learn_metric_graph(matrix_of({flat, flat}, {"a", "b"}), cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kAllColumnsDegenerate);
  }
}

TEST_CASE("column permutation gives the same graph") {
  std::mt19937_64 rng(23);
  PCConfig cfg;
  for (int trial = 0; trial < 5; ++trial) {
    const auto dag = oracle::random_dag(6, 0.4, rng);
    const auto cols = oracle::sample_linear_gaussian(dag, 2000, rng);
    std::vector<std::string> names;
    for (int v = 0; v < 6; ++v) names.push_back("m" + std::to_string(v));
    const auto base = learn_metric_graph(matrix_of(cols, names), cfg);

    std::vector<int> perm{0, 1, 2, 3, 4, 5};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> pc;
    std::vector<std::string> pn;
    for (int p : perm) {
      pc.push_back(cols[static_cast<std::size_t>(p)]);
      pn.push_back(names[static_cast<std::size_t>(p)]);
    }
    const auto other = learn_metric_graph(matrix_of(pc, pn), cfg);
    std::set<std::pair<int, int>> dir, und;
    for (const auto& [a, b] : other.graph.directed) {
      dir.insert({perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]});
    }
    for (const auto& [a, b] : other.graph.undirected) {
      const int x = perm[static_cast<std::size_t>(a)], y = perm[static_cast<std::size_t>(b)];
      und.insert({std::min(x, y), std::max(x, y)});
    }
    CHECK(dir == base.graph.directed);
    CHECK(und == base.graph.undirected);
  }
}

TEST_CASE("pc config validation") {
  PCConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.max_cond = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
