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

#include "rescue/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "rescue/benchmarks.hpp"
#include "rescue/errors.hpp"
#include "rescue/pareto.hpp"

namespace rescue::theory {

using nlohmann::json;

namespace {

double front_hv(const std::vector<Vector>& points, const Vector& reference) {
  return points.empty() ? 0.0 : pareto::hypervolume(pareto::pareto_filter(points), reference);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double paired_p_value(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) return mean == 0.0 ? 1.0 : 0.0;
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n) - 1.0);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

// --------------------------------------------------------------------------
// Lipschitz constant

std::optional<double> hv_displacement_ratio(const std::vector<Vector>& a, const std::vector<Vector>& b,
                                            const Vector& reference) {
  if (a.size() != b.size()) throw DomainError("hv_displacement_ratio: fronts need the same cardinality");
  double disp = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) disp = std::max(disp, (a[i] - b[i]).norm());
  if (!(disp > 0.0)) return std::nullopt;
  return std::abs(front_hv(a, reference) - front_hv(b, reference)) / disp;
}

LipschitzEstimate estimate_hv_lipschitz(const std::vector<Vector>& base, const Vector& reference, int n_perturbations,
                                        double magnitude, std::uint64_t seed) {
  if (base.empty()) throw DomainError("estimate_hv_lipschitz: empty base front");
  if (n_perturbations < 1) throw DomainError("estimate_hv_lipschitz: n_perturbations must be >= 1");
  if (!(magnitude >= 0.0)) throw DomainError("estimate_hv_lipschitz: magnitude must be >= 0");
  const int m = static_cast<int>(reference.size());
  if (m > 3) throw DomainError("estimate_hv_lipschitz: exact hypervolume needs M <= 3");
  Vector span = Vector::Zero(m);
  for (const auto& p : base) span = span.cwiseMax(reference - p);
  const int max_size = std::min<int>(static_cast<int>(base.size()), 20);

  LipschitzEstimate out;
  for (int k = 0; k < n_perturbations; ++k) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::uniform_int_distribution<int> size(1, max_size);
    std::vector<int> idx(base.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(size(rng)));
    std::uniform_real_distribution<double> u(-magnitude, magnitude);
    std::vector<Vector> a, b;
    for (int i : idx) {
      const Vector& p = base[static_cast<std::size_t>(i)];
      Vector q = p;
      for (int j = 0; j < m; ++j) q[j] += u(rng) * span[j];
      a.push_back(p);
      b.push_back(q);
    }
    const auto r = hv_displacement_ratio(a, b, reference);
    if (!r) {
      ++out.skipped;
      continue;
    }
    ++out.pairs;
    out.L_hat = std::max(out.L_hat, *r);
  }
  return out;
}

LipschitzEstimate estimate_hv_lipschitz(const Problem& problem, int n_perturbations, double magnitude,
                                        std::uint64_t seed) {
  if (!problem.reference_point()) throw DomainError("estimate_hv_lipschitz: problem has no reference point");
  const Vector ref = *problem.reference_point();
  const auto oracle = benchmarks::oracle_pareto(problem, benchmarks::default_oracle_grid(problem), ref);
  return estimate_hv_lipschitz(oracle.front.points, ref, n_perturbations, magnitude, seed);
}

// --------------------------------------------------------------------------
// Prior error

XiEstimate estimate_xi(const surrogate::CausalPrior& prior, const Problem& problem, const std::vector<int>& grid_sizes,
                       int fidelity_levels, int n_mc) {
  if (prior.outputs() != problem.num_objectives()) throw DomainError("estimate_xi: prior/objective count mismatch");
  const auto xs = benchmarks::grid_configs(problem.config_space(), grid_sizes);
  const auto ss = problem.fidelity_space().candidate_levels(fidelity_levels);
  XiEstimate out;
  for (const auto& x : xs) {
    for (double s : ss) {
      const auto v = prior.at(x, s);
      out.xi_hat = std::max(out.xi_hat, (problem.evaluate(x, s).y - v.mean).norm());
      if (n_mc > 0) out.mc_error = std::max(out.mc_error, v.std.norm() / std::sqrt(static_cast<double>(n_mc)));
      ++out.grid_points;
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Bound

void BoundConstants::validate() const {
  if (!(L_hat >= 0.0) || !(xi_hat >= 0.0) || !(B >= 0.0)) throw DomainError("BoundConstants: constants must be >= 0");
  if (!(c_min > 0.0)) throw DomainError("BoundConstants: c_min must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("BoundConstants: rho must lie in (0,1)");
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (!(beta[i] >= 0.0)) throw DomainError("BoundConstants: beta must be >= 0");
    if (i > 0 && beta[i] < beta[i - 1]) throw DomainError("BoundConstants: beta must be nondecreasing");
  }
}

double default_beta(int t, int grid_points, double rho) {
  const double tt = std::max(t, 1);
  return 2.0 * std::log(std::max(grid_points, 1) * tt * tt * std::numbers::pi * std::numbers::pi / (6.0 * rho));
}

double BoundConstants::beta_at(int t, int grid_points) const {
  if (beta.empty()) return default_beta(t, grid_points, rho);
  const std::size_t i = static_cast<std::size_t>(std::max(t, 1) - 1);
  return i < beta.size() ? beta[i] : beta.back();
}

double bound_rhs(double L_hat, double beta, double sigma_max, double xi_hat) {
  return L_hat * (std::sqrt(std::max(beta, 0.0)) * sigma_max + xi_hat);
}

BoundReport check_per_iteration_bound(const runner::RunLog& log, const BoundConstants& constants) {
  constants.validate();
  const auto& th = log.theory;
  if (!log.config.track_theory || th.lhs.empty()) throw StateError("check_per_iteration_bound: run lacks a theory trace");
  if (th.sigma_max.size() != th.lhs.size()) throw StateError("check_per_iteration_bound: trace lengths differ");
  BoundReport rep;
  rep.constants = constants;
  rep.grid_points = th.grid_points;
  double cl = 0.0, cr = 0.0;
  for (std::size_t i = 0; i < th.lhs.size(); ++i) {
    BoundRow r;
    r.t = static_cast<int>(i);
    r.lhs = th.lhs[i];
    r.beta = constants.beta_at(r.t, th.grid_points);
    r.sigma_max = th.sigma_max[i];
    r.rhs = bound_rhs(constants.L_hat, r.beta, r.sigma_max, constants.xi_hat);
    if (!std::isfinite(r.lhs) || !std::isfinite(r.rhs)) throw NumericalError("check_per_iteration_bound: non-finite trace");
    r.cumulative_lhs = (cl += r.lhs);
    r.cumulative_rhs = (cr += r.rhs);
    if (r.lhs > r.rhs) {
      rep.failing.push_back(r.t);
      rep.per_iteration_pass = false;
    }
    if (r.cumulative_lhs > r.cumulative_rhs) rep.cumulative_pass = false;
    rep.rows.push_back(r);
  }
  for (std::size_t k = 0; k < th.acq_gain.size() && k < th.sf_gain.size(); ++k) {
    if (std::isnan(th.acq_gain[k]) || std::isnan(th.sf_gain[k])) continue;
    GainBoundRow r;
    r.t = static_cast<int>(k) + 1;
    r.weighted_acquisition = th.acq_gain[k];
    r.single_fidelity_gain = th.sf_gain[k];
    // The posterior the acquisition saw is the one after iteration t - 1.
    r.lower_bound = th.sf_gain[k] - bound_rhs(constants.L_hat, constants.beta_at(r.t, th.grid_points),
                                              th.sigma_max[k], constants.xi_hat);
    r.holds = r.weighted_acquisition >= r.lower_bound - 1e-9 * std::max(1.0, std::abs(r.lower_bound));
    if (!r.holds) ++rep.gain_bound_failures;
    rep.gain_bound.push_back(r);
  }
  return rep;
}

json BoundReport::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"t", r.t},
                      {"lhs", r.lhs},
                      {"rhs", r.rhs},
                      {"cumulative_lhs", r.cumulative_lhs},
                      {"cumulative_rhs", r.cumulative_rhs},
                      {"beta", r.beta},
                      {"sigma_max", r.sigma_max}});
  }
  json gb = json::array();
  for (const auto& r : gain_bound) {
    gb.push_back({{"t", r.t},
                  {"weighted_acquisition", r.weighted_acquisition},
                  {"single_fidelity_gain", r.single_fidelity_gain},
                  {"lower_bound", r.lower_bound},
                  {"holds", r.holds}});
  }
  return {{"L_hat", constants.L_hat},
          {"xi_hat", constants.xi_hat},
          {"rho", constants.rho},
          {"B", constants.B},
          {"c_min", constants.c_min},
          {"grid_points", grid_points},
          {"per_iteration", rows_j},
          {"failing_iterations", failing},
          {"per_iteration_pass", per_iteration_pass},
          {"cumulative_pass", cumulative_pass},
          {"gain_bound", gb},
          {"gain_bound_failures", gain_bound_failures},
          {"pass", pass()}};
}

surrogate::CausalPrior initial_prior(const runner::RunConfig& config, const Problem& problem) {
  const auto cm = runner::initial_causal_model(config, problem);
  if (!cm) return surrogate::CausalPrior(problem.num_objectives());
  return surrogate::CausalPrior(cm, surrogate::CausalPrior::Block::kObjectives);
}

TheoryResult run_theory(const runner::RunConfig& config, const TheoryOptions& options) {
  runner::RunConfig c = config;
  c.track_theory = true;
  c.validate();
  const auto problem = benchmarks::make_problem(c.problem, c.problem_options);
  TheoryResult out;
  out.log = runner::run(c, *problem);
  out.lipschitz = estimate_hv_lipschitz(*problem, options.lipschitz_perturbations, options.lipschitz_magnitude,
                                        derive_seed(c.seed, 9));
  out.xi = estimate_xi(initial_prior(c, *problem), *problem, benchmarks::uniform_grid(problem->config_space(), options.xi_grid),
                       options.xi_fidelity_levels, c.causal.n_mc);
  BoundConstants k;
  k.L_hat = out.lipschitz.L_hat;
  k.xi_hat = out.xi.xi_hat;
  k.rho = options.rho;
  k.c_min = c.cost.min_cost(problem->fidelity_space());
  out.report = check_per_iteration_bound(out.log, k);
  return out;
}

json TheoryResult::to_json() const {
  json j = report.to_json();
  j["lipschitz_pairs"] = lipschitz.pairs;
  j["lipschitz_skipped"] = lipschitz.skipped;
  j["xi_grid_points"] = xi.grid_points;
  j["xi_mc_error"] = xi.mc_error;
  j["method"] = runner::method_name(log.config.method);
  j["seed"] = log.config.seed;
  j["iterations"] = log.iterations;
  return j;
}

// --------------------------------------------------------------------------
// Bias robustness

BiasRobustness bias_robustness_experiment(const runner::RunConfig& base, const std::vector<double>& delta_scales,
                                          const std::vector<std::uint64_t>& seeds,
                                          const std::vector<runner::Method>& methods) {
  if (delta_scales.empty() || seeds.empty() || methods.empty()) {
    throw ConfigError("bias_robustness_experiment: deltas, seeds and methods must be nonempty");
  }
  BiasRobustness out;
  out.delta_scales = delta_scales;
  out.seeds = seeds;
  const double lo = *std::min_element(delta_scales.begin(), delta_scales.end());
  const double hi = *std::max_element(delta_scales.begin(), delta_scales.end());
  for (runner::Method m : methods) {
    const std::string name = runner::method_name(m);
    std::map<double, std::vector<double>> logreg, reg;
    for (double delta : delta_scales) {
      for (std::uint64_t seed : seeds) {
        runner::RunConfig c = base;
        c.problem = "adversarial";
        c.problem_options.delta_scale = delta;
        c.method = m;
        c.seed = seed;
        c.out_dir.clear();
        auto lg = runner::run(c);
        BiasRow row{name, delta, seed, lg.final_log_regret, std::pow(10.0, lg.final_log_regret), lg.iterations};
        logreg[delta].push_back(row.final_log_regret);
        reg[delta].push_back(row.final_regret);
        out.rows.push_back(row);
        if (m == methods.front() && delta == lo) out.reference_runs.push_back(std::move(lg));
      }
      out.median_log_regret[name][delta] = median(logreg[delta]);
    }
    std::vector<double> ratios;
    for (std::size_t i = 0; i < seeds.size(); ++i) ratios.push_back(reg[hi][i] / reg[lo][i]);
    out.regret_ratio[name] = median(ratios);
    out.p_value[name] = paired_p_value(logreg[hi], logreg[lo]);
  }
  return out;
}

json BiasRobustness::to_json() const {
  json rows_j = json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"method", r.method},
                      {"delta_scale", r.delta_scale},
                      {"seed", r.seed},
                      {"final_log_regret", r.final_log_regret},
                      {"final_regret", r.final_regret},
                      {"iterations", r.iterations}});
  }
  json med = json::object();
  for (const auto& [m, by] : median_log_regret) {
    json arr = json::array();
    for (const auto& [d, v] : by) arr.push_back({{"delta_scale", d}, {"median_final_log_regret", v}});
    med[m] = arr;
  }
  return {{"delta_scales", delta_scales}, {"seeds", seeds},           {"rows", rows_j},
          {"median", med},                {"regret_ratio", regret_ratio}, {"p_value", p_value}};
}

std::vector<double> posterior_std_trace(const Problem& problem, const surrogate::CausalPrior& prior,
                                        const surrogate::KernelSpec& spec,
                                        const std::vector<std::pair<Vector, double>>& queries,
                                        const std::vector<Vector>& grid) {
  if (grid.empty()) throw DomainError("posterior_std_trace: empty grid");
  const std::vector<double> target(grid.size(), kTargetFidelity);
  std::vector<double> out;
  std::vector<Vector> xs;
  std::vector<double> ss;
  std::vector<Vector> ys;
  for (const auto& [x, s] : queries) {
    xs.push_back(x);
    ss.push_back(s);
    ys.push_back(problem.evaluate(x, s).y);
    Matrix y(static_cast<Eigen::Index>(ys.size()), problem.num_objectives());
    for (std::size_t i = 0; i < ys.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = ys[i].transpose();
    const auto post = surrogate::MfcgpPosterior::fit(problem.config_space(), xs, ss, y, spec, prior);
    double smax = 0.0;
    for (const auto& p : post.predict(grid, target)) smax = std::max(smax, p.std().norm());
    out.push_back(smax);
  }
  return out;
}

}  // namespace rescue::theory
