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

// Metric dependency learning: Pearson correlation, partial correlation,
// the Fisher-z conditional independence test and the PC-stable search
// (skeleton, v-structures, Meek rules R1-R3) producing a CPDAG.

#ifndef AVAILSCOPE_CAUSAL_HPP_
#define AVAILSCOPE_CAUSAL_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "availscope/model.hpp"

namespace availscope {

struct PCConfig {
  double alpha = 0.01;
  int max_cond = 3;
  bool standardize = true;
  std::size_t min_rows = 100;

  void validate() const;
};

struct CorrelationResult {
  std::vector<MetricKey> columns;  // retained, in input order
  std::vector<MetricKey> dropped;  // zero-variance columns
  Eigen::MatrixXd corr;
  std::size_t rows = 0;            // complete rows used
};

// Pearson correlation over complete rows; zero-variance columns dropped.
// Throws kInsufficientRows (< 2 complete rows) or kAllColumnsDegenerate.
CorrelationResult correlation_matrix(const MetricMatrix& data, bool standardize = true);

// Correlation of already-extracted columns (all equal length).
Eigen::MatrixXd correlation_of_columns(const std::vector<std::vector<double>>& columns,
                                       bool standardize = true);

// Throws kSingularSubmatrix when the principal submatrix over {i, j} + cond
// is not invertible within 1e-10.
double partial_correlation(const Eigen::MatrixXd& corr, int i, int j, std::span<const int> cond);

struct FisherZResult {
  bool independent = false;
  double p_value = 0.0;
  double statistic = 0.0;
};

// Throws kTooFewSamples when n - s - 3 < 1.
FisherZResult fisher_z_test(double rho, std::size_t n, std::size_t s, double alpha);

struct CiOutcome {
  bool independent = false;
  double p_value = 0.0;
};

// Conditional independence oracle: is i independent of j given cond?
using CiTest = std::function<CiOutcome(int i, int j, std::span<const int> cond)>;

// Fisher-z test over a fixed correlation matrix. A singular conditioning
// submatrix counts as dependence.
class GaussianCiTest {
 public:
  GaussianCiTest(Eigen::MatrixXd corr, std::size_t n, double alpha)
      : corr_(std::move(corr)), n_(n), alpha_(alpha) {}

  CiOutcome operator()(int i, int j, std::span<const int> cond) const;

 private:
  Eigen::MatrixXd corr_;
  std::size_t n_;
  double alpha_;
};

struct SkeletonResult {
  using Pair = std::pair<int, int>;  // first < second

  int num_vars = 0;
  std::vector<std::vector<bool>> adjacency;
  std::map<Pair, std::vector<int>> sepsets;  // exactly the removed pairs
  std::size_t tests_run = 0;

  bool adjacent(int a, int b) const {
    return adjacency[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }
  const std::vector<int>* sepset(int a, int b) const;
};

// PC-stable adjacency search. At each level the adjacency sets are frozen
// before any test runs; conditioning subsets are tried in lexicographic
// order and the first independent one becomes the sepset.
SkeletonResult pc_skeleton(int num_vars, const CiTest& ci, int max_cond);

// Data-driven skeleton over the retained (non-degenerate) columns.
SkeletonResult pc_skeleton(const MetricMatrix& data, const PCConfig& cfg);

struct OrientationResult {
  MetricDependencyGraph graph;
  std::vector<std::pair<int, int>> conflicts;  // edges left undirected
};

OrientationResult orient_v_structures(const SkeletonResult& skel,
                                      std::vector<std::string> metric_names);

// Applies Meek rules R1-R3 to a fixpoint. Orientations that would close a
// directed cycle or create a new v-structure are skipped.
MetricDependencyGraph meek_closure(MetricDependencyGraph pdag);

struct LearnedGraph {
  MetricDependencyGraph graph;
  std::vector<std::string> dropped;  // degenerate metrics
  std::vector<std::pair<std::string, std::string>> conflicts;
  std::size_t rows_used = 0;
  std::size_t tests_run = 0;
};

// drop-degenerate -> standardize -> correlate -> skeleton -> v-structures ->
// Meek. Columns are processed in metric-name order so the result does not
// depend on column order.
LearnedGraph learn_metric_graph(const MetricMatrix& data, const PCConfig& cfg);

// Column labels: bare metric names when all columns share one service,
// otherwise "ip:service:metric".
std::vector<std::string> metric_labels(const std::vector<MetricKey>& keys);

void to_json(nlohmann::json& j, const PCConfig& cfg);
void from_json(const nlohmann::json& j, PCConfig& cfg);
void to_json(nlohmann::json& j, const LearnedGraph& learned);

}  // namespace availscope

#endif  // AVAILSCOPE_CAUSAL_HPP_
