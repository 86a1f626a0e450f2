// Copyright 2026 The rescue-mfbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

/*!
  \file causal.hpp

  Causal performance model: tiered PC discovery with Fisher-z tests, linear
  Gaussian mechanisms fitted by least squares, and Monte Carlo interventional
  estimates.

  Node tiers order the variables. Options and the fidelity sit in tier 0,
  performance indicators in tier 1, objectives and constraint metrics in tier
  2. Edges from a higher tier into a lower one are forbidden, as is any edge
  into an exogenous node (the fidelity).
*/

#ifndef RESCUE_CAUSAL_HPP
#define RESCUE_CAUSAL_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/core.hpp"

namespace rescue::causal {

inline constexpr int kTierOption = 0;
inline constexpr int kTierIndicator = 1;
inline constexpr int kTierOutcome = 2;

struct Node {
  std::string name;
  int tier = 0;
  bool exogenous = false;  ///< no incoming edges allowed
};

class CausalGraph {
 public:
  CausalGraph() = default;
  explicit CausalGraph(std::vector<Node> nodes);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Node>& nodes() const { return nodes_; }
  int index_of(const std::string& name) const;  ///< -1 when absent

  /// True if the tiers and exogeneity allow an edge from -> to.
  bool allowed(int from, int to) const;
  /// Adds from -> to. Throws DomainError on a forbidden edge or a cycle.
  void add_edge(int from, int to);
  bool has_edge(int from, int to) const;
  bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }
  std::vector<int> parents(int node) const;
  std::vector<std::pair<int, int>> edges() const;  ///< sorted (from, to)
  /// True if a directed path from -> ... -> to exists.
  bool reachable(int from, int to) const;

  bool is_acyclic() const;
  bool respects_tiers() const;
  std::vector<int> topological_order() const;

  nlohmann::json to_json() const;
  static CausalGraph from_json(const nlohmann::json& j);

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<char>> adj_;  ///< adj_[from][to]
};

/// Column-labelled sample matrix (rows are samples).
struct ObservationalDataset {
  std::vector<std::string> names;
  Matrix data;

  int rows() const { return static_cast<int>(data.rows()); }
  int cols() const { return static_cast<int>(data.cols()); }
  int column(const std::string& name) const;  ///< throws DomainError when absent

  /// Stacks rows of another dataset with identical column names.
  ObservationalDataset concat(const ObservationalDataset& other) const;

  static ObservationalDataset read_csv(std::istream& in);
  static ObservationalDataset read_csv_file(const std::string& path);
  void write_csv(std::ostream& out) const;
};

struct CiResult {
  bool independent = false;
  double p_value = 1.0;
  double statistic = 0.0;
  double partial_correlation = 0.0;
};

/// Fisher-z conditional independence test of columns a and b given cond.
CiResult fisher_z_test(const ObservationalDataset& data, int a, int b, const std::vector<int>& cond,
                       double alpha = 0.05);

/// Same test from a precomputed correlation matrix over n samples. Columns
/// with zero variance are reported independent of everything.
CiResult fisher_z_from_correlation(const Matrix& corr, const std::vector<char>& constant_column, int n, int a,
                                   int b, const std::vector<int>& cond, double alpha);

struct PcOptions {
  double alpha = 0.05;
  int max_condition_size = 4;
};

/// Tiered PC-stable discovery. The nodes describe the data columns in order.
/// The result is always a DAG that respects the tiers.
CausalGraph pc_discover(const ObservationalDataset& data, const std::vector<Node>& nodes,
                        const PcOptions& options = {});

struct Mechanism {
  std::vector<int> parents;
  Vector weights;
  double intercept = 0.0;
  double residual_variance = 0.0;
};

class LinearGaussianScm {
 public:
  LinearGaussianScm() = default;
  LinearGaussianScm(CausalGraph graph, std::vector<Mechanism> mechanisms);

  const CausalGraph& graph() const { return graph_; }
  const std::vector<Mechanism>& mechanisms() const { return mechanisms_; }
  const std::vector<int>& order() const { return order_; }
  int size() const { return graph_.size(); }

  /// Forward samples with the clamped nodes held fixed (their mechanisms are
  /// severed). Returns an n_mc x size() matrix. Deterministic in seed.
  Matrix sample(const std::vector<std::optional<double>>& clamp, int n_mc, std::uint64_t seed) const;

 private:
  CausalGraph graph_;
  std::vector<Mechanism> mechanisms_;
  std::vector<int> order_;
};

/// Ordinary least squares of every node on its parents; sources get the
/// empirical mean and population variance.
LinearGaussianScm fit_scm(const CausalGraph& graph, const ObservationalDataset& data);

struct DoEstimate {
  Vector mean;
  Vector std;
  int n_mc = 0;
};

/// Per-node sample mean and sample standard deviation under do(clamp).
DoEstimate do_sample_moments(const LinearGaussianScm& scm, const std::vector<std::optional<double>>& clamp,
                             int n_mc, std::uint64_t seed);

/// Where the problem variables live among the graph nodes.
struct VariableMap {
  std::vector<int> options;
  int fidelity = -1;
  std::vector<int> indicators;
  std::vector<int> objectives;
  std::vector<int> constraints;
};

/// Nodes for a problem, in row layout [x..., s, z..., y..., h...].
std::vector<Node> problem_nodes(const Problem& problem);
VariableMap problem_variable_map(const Problem& problem);

/// n observational rows: uniform configurations, fidelity from
/// Problem::sample_observational_fidelity(), observation noise as configured.
ObservationalDataset observational_from_problem(const Problem& problem, int n, std::uint64_t seed);

/// Interventional records as rows over the same layout.
ObservationalDataset rows_from_dataset(const Problem& problem, const Dataset& ds);

struct CausalModelOptions {
  int n_mc = 512;
  std::uint64_t seed = 0;
};

/// Fitted causal performance model with the problem-variable mapping. The
/// default-constructed model is agnostic: zero means and zero stds.
class CausalModel {
 public:
  CausalModel() = default;
  static CausalModel agnostic(int num_objectives, int num_constraints);
  CausalModel(LinearGaussianScm scm, VariableMap map, ConfigSpace space, CausalModelOptions options = {});

  bool is_agnostic() const { return agnostic_; }
  const LinearGaussianScm& scm() const { return scm_; }
  const CausalGraph& graph() const { return scm_.graph(); }
  const VariableMap& variables() const { return map_; }
  int num_objectives() const { return num_objectives_; }
  int num_constraints() const { return num_constraints_; }

  /// Interventional mean and std of the objectives at do(X=x), s. Uses the
  /// same noise draws for every call (common random numbers).
  DoEstimate objectives(const Vector& x, double s) const;
  DoEstimate constraints(const Vector& x, double s) const;

 private:
  std::pair<DoEstimate, DoEstimate> estimate(const Vector& x, double s) const;

  bool agnostic_ = true;
  int num_objectives_ = 0;
  int num_constraints_ = 0;
  LinearGaussianScm scm_;
  VariableMap map_;
  ConfigSpace space_;
  CausalModelOptions options_;
};

/// Discovery plus fitting on observational data for a problem.
CausalModel learn_causal_model(const Problem& problem, const ObservationalDataset& data,
                               const PcOptions& pc = {}, const CausalModelOptions& options = {});

/// Fits the SCM on a given DAG (discovery bypassed).
CausalModel causal_model_from_graph(const Problem& problem, const CausalGraph& graph,
                                    const ObservationalDataset& data, const CausalModelOptions& options = {});

/// Algorithm refresh rule: true when t is a positive multiple of the cycle.
bool cpm_update_due(int t, int cycle);

/// Rediscovers and refits on the concatenation of observational rows and
/// interventional records (unweighted).
CausalModel update_cpm(const Problem& problem, const ObservationalDataset& observational,
                       const Dataset& interventional, const PcOptions& pc = {},
                       const CausalModelOptions& options = {});

}  // namespace rescue::causal

#endif  // RESCUE_CAUSAL_HPP
