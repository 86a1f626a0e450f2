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
  \file runner.hpp

  The optimization loop, method ablations and result files.

  run() follows the budgeted loop: a cost-aware initial design, a causal
  model learned from observational logs and refreshed every `cpm_cycle`
  iterations, a surrogate refit and one acquisition step per iteration, and
  a final NSGA-II extraction on the posterior mean at the target fidelity.
  An iteration starts while the cumulative cost is at most the budget, so
  the last step may overshoot it.

  The inferred hypervolume of a model is measured by running NSGA-II on the
  posterior mean at the target fidelity (constraints predicted to hold with
  probability above the threshold), evaluating the true objectives at the
  returned configurations, keeping the truly feasible ones and taking the
  hypervolume of their Pareto front.
*/

#ifndef RESCUE_RUNNER_HPP
#define RESCUE_RUNNER_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/acquisition.hpp"
#include "rescue/benchmarks.hpp"
#include "rescue/causal.hpp"
#include "rescue/core.hpp"
#include "rescue/moea.hpp"
#include "rescue/surrogate.hpp"

namespace rescue::runner {

enum class Method { kRescue, kHvkgNoncausal, kEhviSingleFidelity };

std::string method_name(Method m);
/// Accepts the method names and "ehvi" as a short form. Throws ConfigError.
Method parse_method(const std::string& name);

struct KernelConfig {
  bool hyperopt = true;
  bool standardize = true;
  int restarts = 8;
  int evaluations_per_restart = 50;
  double lengthscale = 0.5;
  double fidelity_lengthscale = 0.5;
  double noise_variance = 1e-4;
  double prior_scale = 1.0;
};

struct CausalConfig {
  int n_observational = 1000;
  double alpha = 0.05;
  int max_condition_size = 4;
  int n_mc = 512;
  /// Use a zero prior even for the causal method.
  bool agnostic = false;
  /// Optional DAG file (JSON) that bypasses discovery.
  std::string dag_file;
};

struct RunConfig {
  std::string problem = "healthcare";
  benchmarks::ProblemOptions problem_options;
  double budget = 40.0;
  /// Non-positive means 0.2 * budget.
  double init_budget = 0.0;
  int cpm_cycle = 5;
  /// Stop after this many iterations even with budget left; 0 means no cap.
  int max_iterations = 0;
  CostModel cost = CostModel::exponential(4.8);
  Method method = Method::kRescue;
  std::uint64_t seed = 0;
  acquisition::AcquisitionConfig acquisition;
  KernelConfig kernel;
  CausalConfig causal;
  /// Final extraction.
  moea::Nsga2Config nsga2;
  /// Per-iteration inferred hypervolume.
  moea::Nsga2Config tracking_nsga2 = [] {
    moea::Nsga2Config c;
    c.population = 40;
    c.generations = 20;
    return c;
  }();
  /// Record the quantities used by the bound checks (slower).
  bool track_theory = false;
  /// Keep every acquisition table in the log.
  bool keep_acquisition_tables = false;
  std::string out_dir;

  double effective_init_budget() const { return init_budget > 0.0 ? init_budget : 0.2 * budget; }
  /// Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
  /// FNV-1a over the canonical JSON without out_dir, as 16 hex digits.
  std::string hash() const;
};

struct IterationRow {
  int t = 0;  ///< 0 for initial-design records
  Vector x;
  double s = kTargetFidelity;
  Vector y;  ///< objectives, internal sign
  Vector h;
  double cost = 0.0;
  double cumulative_cost = 0.0;
  double inferred_hv = 0.0;
  double log_regret = 0.0;
  double acquisition_value = 0.0;  ///< NaN for initial-design records
  bool feasible = true;
};

/// Extra per-iteration values for the bound checks. Index t = 0 is the state
/// after the initial design.
struct TheoryTrace {
  std::vector<double> lhs;         ///< HV* - inferred HV
  std::vector<double> sigma_max;   ///< max over the oracle grid of ||sigma_t(x, target)||
  std::vector<double> acq_gain;    ///< c(x_t, s_t) * A(x_t, s_t), index t >= 1
  std::vector<double> sf_gain;     ///< single-fidelity one-step gain at x_t
  int grid_points = 0;
};

struct RunLog {
  RunConfig config;
  std::string problem;
  std::vector<std::string> x_names, y_names, h_names;
  std::vector<bool> maximize;
  nlohmann::json problem_definition;
  int init_records = 0;
  int iterations = 0;
  double hv_star = 0.0;
  Vector reference;
  std::vector<IterationRow> rows;
  /// (cumulative cost, regret) after the initial design and each iteration.
  std::vector<std::pair<double, double>> regret_curve;
  std::vector<Vector> pareto_x;
  std::vector<Vector> pareto_y;  ///< true objectives, internal sign
  bool extraction_infeasible = false;
  double final_inferred_hv = 0.0;
  double final_log_regret = 0.0;
  double aur = 0.0;
  bool aborted = false;
  std::string abort_reason;
  TheoryTrace theory;
  std::vector<acquisition::AcquisitionResult> acquisitions;

  double total_cost() const { return rows.empty() ? 0.0 : rows.back().cumulative_cost; }
  /// Fraction of iterations (t >= 1) whose true constraints fail.
  double violation_rate() const;
  std::vector<double> queried_fidelities() const;
};

/// Runs one optimization. When the surrogate cannot be factorized even with
/// escalated jitter the run stops, the partial log is exported (if out_dir is
/// set) and NumericalError is rethrown.
RunLog run(const RunConfig& config);

/// The causal model a run starts from (learned from the seeded observational
/// logs or fitted on config.causal.dag_file); null for the non-causal methods
/// and the agnostic setting.
std::shared_ptr<const causal::CausalModel> initial_causal_model(const RunConfig& config, const Problem& problem);

/// Same as run() on a caller-supplied problem (its reference point must be set).
RunLog run(const RunConfig& config, const Problem& problem);

/// HV* as the hypervolume of the non-dominated union of the oracle grid front
/// and an NSGA-II front on the noise-free target-fidelity objectives.
double reference_hv_star(const Problem& problem, const Vector& reference);

struct InferredFront {
  std::vector<Vector> x;
  std::vector<Vector> y;  ///< true objectives, internal sign
  double hv = 0.0;
  bool infeasible = false;
};

/// The evaluation protocol described above.
InferredFront inferred_front(const Problem& problem, const surrogate::MfcgpPosterior& objectives,
                             const surrogate::MfcgpPosterior* constraints, const Vector& reference,
                             const moea::Nsga2Config& nsga, double feasibility_threshold = 0.5);

struct MethodSummary {
  std::string method;
  int runs = 0;
  double median_aur = 0.0;
  double mean_aur = 0.0;
  double median_final_log_regret = 0.0;
  double median_iterations = 0.0;
  double violation_rate = 0.0;
  std::map<std::string, int> fidelity_histogram;
};

/// Paired comparison of `method` against `baseline` over shared seeds.
struct PairedStat {
  std::string method;
  std::string baseline;
  double mean_difference = 0.0;  ///< baseline AUR - method AUR
  double t_statistic = 0.0;
  double p_value = 1.0;
  double cohen_d = 0.0;
  double gain_percent = 0.0;  ///< 100 (baseline AUR - method AUR) / baseline AUR, seed means
  int wins = 0;  ///< seeds where method AUR <= baseline AUR
};

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  std::vector<Method> methods;
  std::map<std::string, std::vector<RunLog>> runs;  ///< keyed by method name, seed order
  std::vector<MethodSummary> summary;
  std::vector<PairedStat> paired;

  nlohmann::json to_json() const;
};

AblationResult run_method_ablation(const RunConfig& config, const std::vector<Method>& methods,
                                   const std::vector<std::uint64_t>& seeds);

/// Writes run.csv, pareto.csv, summary.json, config.json, problem.json and
/// plotdata/regret_vs_cost.csv (plus theory.csv when traced). Throws Error
/// naming the path on IO failure.
void export_results(const RunLog& log, const std::string& dir);

/// run.csv column names: t, x..., s, y..., h..., cost, cumulative_cost,
/// inferred_hv, log_regret, acquisition_value, feasible.
std::vector<std::string> run_csv_header(const RunLog& log);

// Problem definition files -------------------------------------------------

nlohmann::json cost_to_json(const CostModel& cost);
/// {"form": "exponential", "rate": r} or {"form": "table", "costs": {"s": c}}.
CostModel cost_from_json(const nlohmann::json& j);

/// Description of a problem's spaces, outputs and cost.
struct ProblemSchema {
  ConfigSpace config_space;
  FidelitySpace fidelity_space;
  int num_objectives = 0;
  std::vector<std::string> objective_names;
  std::vector<bool> maximize;
  std::vector<Constraint> constraints;
  CostModel cost;

  nlohmann::json to_json() const;
  static ProblemSchema from_json(const nlohmann::json& j);
  static ProblemSchema of(const Problem& problem, const CostModel& cost);
};

}  // namespace rescue::runner

#endif  // RESCUE_RUNNER_HPP
