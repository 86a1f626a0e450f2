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
  \file theory.hpp

  Empirical checks of the regret bound: estimates of the hypervolume
  Lipschitz constant and of the causal prior's sup error, per-iteration and
  cumulative bound traces for logged runs, and the bias-robustness sweep.

  The bound compared against is

    HV* - HV(P_t) <= L * (beta_t^(1/2) * max_x ||sigma_t(x, target)|| + xi)

  with beta_t = 2 ln(|grid| t^2 pi^2 / (6 rho)) by default and the maximum
  taken over the oracle grid. ||.|| is the Euclidean norm over objectives.
*/

#ifndef RESCUE_THEORY_HPP
#define RESCUE_THEORY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/core.hpp"
#include "rescue/runner.hpp"
#include "rescue/surrogate.hpp"

namespace rescue::theory {

// --------------------------------------------------------------------------
// Constants

struct LipschitzEstimate {
  double L_hat = 0.0;
  int pairs = 0;    ///< pairs with nonzero displacement
  int skipped = 0;  ///< zero-displacement pairs
};

/// |HV(a) - HV(b)| / max_i ||a_i - b_i|| for same-size fronts with
/// corresponding points; nullopt when the displacement is zero.
std::optional<double> hv_displacement_ratio(const std::vector<Vector>& a, const std::vector<Vector>& b,
                                            const Vector& reference);

/// Maximum ratio over `n_perturbations` pairs (subset of `base`, same subset
/// with every coordinate shifted by up to `magnitude` times the span between
/// the ideal point and the reference). Pair k depends only on (seed, k), so
/// a larger n never lowers the estimate.
LipschitzEstimate estimate_hv_lipschitz(const std::vector<Vector>& base, const Vector& reference, int n_perturbations,
                                        double magnitude, std::uint64_t seed = 0);

/// Uses the oracle Pareto front and reference point of the problem.
LipschitzEstimate estimate_hv_lipschitz(const Problem& problem, int n_perturbations, double magnitude,
                                        std::uint64_t seed = 0);

struct XiEstimate {
  double xi_hat = 0.0;
  /// Largest Monte Carlo standard error of the prior mean over the grid.
  double mc_error = 0.0;
  int grid_points = 0;
};

/// max over the grid of ||f(x, s) - prior_mean(x, s)|| (internal sign). The
/// grid is grid_configs(grid_sizes) times the fidelity candidate levels.
XiEstimate estimate_xi(const surrogate::CausalPrior& prior, const Problem& problem, const std::vector<int>& grid_sizes,
                       int fidelity_levels = 8, int n_mc = 0);

struct BoundConstants {
  double L_hat = 1.0;
  double xi_hat = 0.0;
  double rho = 0.05;
  /// RKHS-norm proxy; reported only.
  double B = 1.0;
  double c_min = 1.0;
  /// Explicit schedule beta_1, beta_2, ...; empty means the default.
  std::vector<double> beta;

  /// Throws DomainError on negative constants or a decreasing schedule.
  void validate() const;
  /// beta_t for t >= 1 (t = 0 uses beta_1).
  double beta_at(int t, int grid_points) const;
};

double default_beta(int t, int grid_points, double rho);

/// rhs_t = L (beta^(1/2) sigma_max + xi).
double bound_rhs(double L_hat, double beta, double sigma_max, double xi_hat);

struct BoundRow {
  int t = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double cumulative_lhs = 0.0;
  double cumulative_rhs = 0.0;
  double beta = 0.0;
  double sigma_max = 0.0;
};

struct GainBoundRow {
  int t = 0;
  double weighted_acquisition = 0.0;  ///< c(x_t, s_t) A(x_t, s_t)
  double single_fidelity_gain = 0.0;
  double lower_bound = 0.0;  ///< gain - L (beta^(1/2) sigma_max + xi)
  bool holds = true;
};

struct BoundReport {
  BoundConstants constants;
  int grid_points = 0;
  std::vector<BoundRow> rows;
  std::vector<int> failing;             ///< iterations with lhs > rhs
  bool per_iteration_pass = true;
  bool cumulative_pass = true;
  std::vector<GainBoundRow> gain_bound;
  int gain_bound_failures = 0;

  bool pass() const { return per_iteration_pass && cumulative_pass; }
  /// {L_hat, xi_hat, per_iteration: [{t, lhs, rhs}], pass, ...}
  nlohmann::json to_json() const;
};

/// Needs a run logged with track_theory. Throws StateError otherwise.
BoundReport check_per_iteration_bound(const runner::RunLog& log, const BoundConstants& constants);

/// Settings used by run_theory.
struct TheoryOptions {
  int lipschitz_perturbations = 1000;
  double lipschitz_magnitude = 0.05;
  int xi_grid = 21;
  int xi_fidelity_levels = 6;
  double rho = 0.05;
};

struct TheoryResult {
  runner::RunLog log;
  LipschitzEstimate lipschitz;
  XiEstimate xi;
  BoundReport report;

  nlohmann::json to_json() const;
};

/// The causal prior of the run's initial model (agnostic for the non-causal
/// methods).
surrogate::CausalPrior initial_prior(const runner::RunConfig& config, const Problem& problem);

/// Runs `config` with theory tracking, estimates (L_hat, xi_hat) and checks
/// the bound.
TheoryResult run_theory(const runner::RunConfig& config, const TheoryOptions& options = {});

// --------------------------------------------------------------------------
// Bias robustness

struct BiasRow {
  std::string method;
  double delta_scale = 0.0;
  std::uint64_t seed = 0;
  double final_log_regret = 0.0;
  double final_regret = 0.0;
  int iterations = 0;
};

struct BiasRobustness {
  std::vector<double> delta_scales;
  std::vector<std::uint64_t> seeds;
  std::vector<BiasRow> rows;
  /// method -> delta -> median final log-regret.
  std::map<std::string, std::map<double, double>> median_log_regret;
  /// method -> median over seeds of regret(max delta) / regret(min delta).
  std::map<std::string, double> regret_ratio;
  /// method -> paired t-test p-value of log-regret at max vs min delta.
  std::map<std::string, double> p_value;
  /// Runs of the first method at the smallest delta, by seed order.
  std::vector<runner::RunLog> reference_runs;

  nlohmann::json to_json() const;
};

/// Runs each method at each delta_scale and seed on the adversarial problem
/// (base.problem is overridden).
BiasRobustness bias_robustness_experiment(const runner::RunConfig& base, const std::vector<double>& delta_scales,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::vector<runner::Method>& methods = {
                                              runner::Method::kRescue, runner::Method::kHvkgNoncausal});

/// max over `grid` of ||sigma(x, target)|| after conditioning on the first k
/// queries, k = 1..n, with a fixed kernel and no standardisation. Targets are
/// noise-free evaluations; the values do not enter the variance.
std::vector<double> posterior_std_trace(const Problem& problem, const surrogate::CausalPrior& prior,
                                        const surrogate::KernelSpec& spec,
                                        const std::vector<std::pair<Vector, double>>& queries,
                                        const std::vector<Vector>& grid);

}  // namespace rescue::theory

#endif  // RESCUE_THEORY_HPP
