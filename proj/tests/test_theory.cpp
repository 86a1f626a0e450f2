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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "rescue/benchmarks.hpp"
#include "rescue/causal.hpp"
#include "rescue/errors.hpp"
#include "rescue/theory.hpp"

using namespace rescue;
using namespace rescue::theory;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// y1 = 2 x1 + x2, y2 = x1 - 3 x2 at every fidelity.
class LinearProblem : public Problem {
 public:
  LinearProblem() {
    config_space_ = ConfigSpace({{0.0, 1.0}, {0.0, 1.0}}, {"X1", "X2"});
    fidelity_space_ = FidelitySpace::discrete({0.5, 1.0});
    objective_names_ = {"Y1", "Y2"};
    maximize_ = {false, false};
  }
  std::string name() const override { return "linear"; }
  Evaluation evaluate_raw(const Vector& x, double) const override {
    return Evaluation{v2(2.0 * x[0] + x[1], x[0] - 3.0 * x[1]), Vector(0), Vector(0)};
  }
};

runner::RunLog synthetic_log(std::vector<double> lhs, std::vector<double> sigma) {
  runner::RunLog lg;
  lg.config.track_theory = true;
  lg.theory.lhs = std::move(lhs);
  lg.theory.sigma_max = std::move(sigma);
  lg.theory.grid_points = 100;
  return lg;
}

runner::RunConfig small_config() {
  runner::RunConfig c;
  c.budget = 20.0;
  c.max_iterations = 3;
  c.kernel.restarts = 2;
  c.kernel.evaluations_per_restart = 15;
  c.acquisition.n_fantasies = 4;
  c.acquisition.n_inner_candidates = 48;
  c.acquisition.n_outer_candidates = 12;
  c.acquisition.continuous_fidelity_levels = 4;
  c.causal.n_observational = 300;
  c.causal.n_mc = 64;
  c.nsga2.population = 20;
  c.nsga2.generations = 10;
  c.tracking_nsga2.population = 12;
  c.tracking_nsga2.generations = 4;
  return c;
}

}  // namespace

TEST_CASE("hypervolume displacement ratio of a single shifted point") {
  const Vector ref = v2(2.0, 2.0);
  for (double h : {1e-1, 1e-3, 1e-6}) {
    const auto r = hv_displacement_ratio({v2(1.0, 1.0)}, {v2(1.0 - h, 1.0)}, ref);
    REQUIRE(r.has_value());
    // HV = (2 - a)(2 - b), so the ratio is exactly (2 - b) = 1.
    CHECK(*r == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_FALSE(hv_displacement_ratio({v2(1.0, 1.0)}, {v2(1.0, 1.0)}, ref).has_value());
  CHECK_THROWS_AS(hv_displacement_ratio({v2(1.0, 1.0)}, {}, ref), DomainError);
}

TEST_CASE("Lipschitz estimate grows with the sample and skips zero shifts") {
  const Vector ref = v2(2.0, 2.0);
  const std::vector<Vector> base{v2(0.2, 1.5), v2(0.8, 0.9), v2(1.5, 0.3)};
  const auto a = estimate_hv_lipschitz(base, ref, 100, 0.05, 4);
  const auto b = estimate_hv_lipschitz(base, ref, 1000, 0.05, 4);
  CHECK(a.pairs == 100);
  CHECK(b.L_hat >= a.L_hat);
  CHECK(a.L_hat > 0.0);
  // Shifting every point of a front moves HV by at most the sum of the box
  // faces, bounded here by sqrt(2) times the extents (2 + 2) per point.
  CHECK(b.L_hat <= 3.0 * 4.0 * std::sqrt(2.0));
  const auto z = estimate_hv_lipschitz(base, ref, 10, 0.0, 1);
  CHECK(z.skipped == 10);
  CHECK(z.L_hat == 0.0);
  CHECK_THROWS_AS(estimate_hv_lipschitz(std::vector<Vector>{}, ref, 10, 0.1), DomainError);

  const auto p = benchmarks::make_problem("healthcare");
  const auto h = estimate_hv_lipschitz(*p, 200, 0.05, 0);
  CHECK(h.pairs + h.skipped == 200);
  CHECK(h.L_hat > 0.0);
}

TEST_CASE("xi of the agnostic prior is the largest objective norm") {
  const auto p = benchmarks::make_problem("branin-currin");
  const surrogate::CausalPrior zero(p->num_objectives());
  const std::vector<int> grid{5, 5};
  const auto xi = estimate_xi(zero, *p, grid, 3);
  double expect = 0.0;
  for (const auto& x : benchmarks::grid_configs(p->config_space(), grid)) {
    for (double s : p->fidelity_space().candidate_levels(3)) expect = std::max(expect, p->evaluate(x, s).y.norm());
  }
  CHECK(xi.xi_hat == doctest::Approx(expect).epsilon(1e-12));
  CHECK(xi.grid_points == 25 * static_cast<int>(p->fidelity_space().candidate_levels(3).size()));
  // Refinement to a superset grid never lowers the estimate.
  const auto fine = estimate_xi(zero, *p, {9, 9}, 5);
  CHECK(fine.xi_hat >= xi.xi_hat);
}

TEST_CASE("xi of an exact linear causal model vanishes") {
  LinearProblem p;
  const auto obs = causal::observational_from_problem(p, 400, 3);
  const auto layout = causal::problem_nodes(p);
  causal::CausalGraph g(layout);
  g.add_edge(g.index_of("X1"), g.index_of("Y1"));
  g.add_edge(g.index_of("X2"), g.index_of("Y1"));
  g.add_edge(g.index_of("X1"), g.index_of("Y2"));
  g.add_edge(g.index_of("X2"), g.index_of("Y2"));
  const auto cm = std::make_shared<const causal::CausalModel>(causal::causal_model_from_graph(p, g, obs, {256, 1}));
  const surrogate::CausalPrior prior(cm, surrogate::CausalPrior::Block::kObjectives);
  const auto xi = estimate_xi(prior, p, {6, 6}, 2, 256);
  CHECK(xi.xi_hat <= 1e-6);
  CHECK(xi.mc_error <= 1e-6);
}

TEST_CASE("beta schedule and bound formula") {
  const double b1 = default_beta(1, 100, 0.05);
  CHECK(b1 == doctest::Approx(2.0 * std::log(100.0 * std::numbers::pi * std::numbers::pi / 0.3)));
  CHECK(default_beta(0, 100, 0.05) == b1);
  CHECK(default_beta(5, 100, 0.05) > b1);
  CHECK(bound_rhs(2.0, 4.0, 0.5, 0.1) == doctest::Approx(2.0 * (2.0 * 0.5 + 0.1)));
  // Nondecreasing in each constant.
  CHECK(bound_rhs(3.0, 4.0, 0.5, 0.1) >= bound_rhs(2.0, 4.0, 0.5, 0.1));
  CHECK(bound_rhs(2.0, 9.0, 0.5, 0.1) >= bound_rhs(2.0, 4.0, 0.5, 0.1));
  CHECK(bound_rhs(2.0, 4.0, 0.5, 0.3) >= bound_rhs(2.0, 4.0, 0.5, 0.1));

  BoundConstants k;
  k.beta = {1.0, 2.0, 2.0};
  CHECK_NOTHROW(k.validate());
  CHECK(k.beta_at(2, 10) == 2.0);
  CHECK(k.beta_at(9, 10) == 2.0);
  k.beta = {2.0, 1.0};
  CHECK_THROWS_AS(k.validate(), DomainError);
  k.beta.clear();
  k.xi_hat = -1.0;
  CHECK_THROWS_AS(k.validate(), DomainError);
}

TEST_CASE("bound check on synthetic traces") {
  BoundConstants k;
  k.L_hat = 1.0;
  k.xi_hat = 0.0;
  k.beta = {1.0};
  // Zero regret always satisfies the bound.
  auto rep = check_per_iteration_bound(synthetic_log({0.0, -0.1, 0.0}, {0.0, 0.0, 0.0}), k);
  CHECK(rep.pass());
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[1].cumulative_lhs == doctest::Approx(-0.1));

  rep = check_per_iteration_bound(synthetic_log({0.5, 0.3, 0.05}, {1.0, 0.2, 0.1}), k);
  CHECK_FALSE(rep.per_iteration_pass);
  REQUIRE(rep.failing.size() == 1);
  CHECK(rep.failing[0] == 1);
  CHECK(rep.cumulative_pass);  // 0.85 <= 1.3
  CHECK_FALSE(rep.pass());
  CHECK(rep.rows[1].rhs == doctest::Approx(0.2));

  // A large prior error makes the bound hold trivially.
  k.xi_hat = 100.0;
  CHECK(check_per_iteration_bound(synthetic_log({0.5, 0.3, 0.05}, {1.0, 0.2, 0.1}), k).pass());

  const auto j = rep.to_json();
  CHECK(j.at("per_iteration").size() == 3);
  CHECK(j.contains("L_hat"));
  CHECK(j.contains("xi_hat"));
  CHECK(j.at("pass").get<bool>() == false);

  runner::RunLog untracked;
  CHECK_THROWS_AS(check_per_iteration_bound(untracked, k), StateError);
}

TEST_CASE("gain bound rows use the pre-query posterior") {
  BoundConstants k;
  k.L_hat = 2.0;
  k.xi_hat = 0.1;
  k.beta = {4.0};
  auto lg = synthetic_log({0.1, 0.1, 0.1}, {0.5, 0.25, 0.1});
  lg.theory.acq_gain = {0.2, 0.0};
  lg.theory.sf_gain = {0.3, 5.0};
  const auto rep = check_per_iteration_bound(lg, k);
  REQUIRE(rep.gain_bound.size() == 2);
  CHECK(rep.gain_bound[0].lower_bound == doctest::Approx(0.3 - 2.0 * (2.0 * 0.5 + 0.1)));
  CHECK(rep.gain_bound[0].holds);
  CHECK(rep.gain_bound[1].lower_bound == doctest::Approx(5.0 - 2.0 * (2.0 * 0.25 + 0.1)));
  CHECK_FALSE(rep.gain_bound[1].holds);
  CHECK(rep.gain_bound_failures == 1);
}

TEST_CASE("posterior std trace depends only on the query locations") {
  const std::vector<std::pair<Vector, double>> queries{
      {v2(0.1, 0.2), 0.2}, {v2(0.7, 0.4), 0.5}, {v2(0.3, 0.9), 0.2}, {v2(0.5, 0.5), 1.0}};
  const auto grid = benchmarks::grid_configs(ConfigSpace({{0.0, 1.0}, {0.0, 1.0}}), {11, 11});
  const auto spec = surrogate::KernelSpec::defaults(2, 2);
  std::vector<std::vector<double>> traces;
  for (double delta : {0.0, 10.0, 100.0}) {
    benchmarks::ProblemOptions o;
    o.delta_scale = delta;
    const auto p = benchmarks::make_problem("adversarial", o);
    const auto obs = causal::observational_from_problem(*p, 300, 5);
    const auto cm = std::make_shared<const causal::CausalModel>(causal::learn_causal_model(*p, obs, {}, {64, 2}));
    traces.push_back(posterior_std_trace(*p, surrogate::CausalPrior(cm, surrogate::CausalPrior::Block::kObjectives),
                                         spec, queries, grid));
  }
  REQUIRE(traces[0].size() == queries.size());
  CHECK(traces[0] == traces[1]);
  CHECK(traces[0] == traces[2]);
}

TEST_CASE("posterior std is non-increasing for target-fidelity queries") {
  const auto p = benchmarks::make_problem("branin-currin");
  std::vector<std::pair<Vector, double>> queries;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 12; ++i) queries.emplace_back(v2(u(rng), u(rng)), kTargetFidelity);
  const auto grid = benchmarks::grid_configs(p->config_space(), {9, 9});
  const auto trace = posterior_std_trace(*p, surrogate::CausalPrior(2), surrogate::KernelSpec::defaults(2, 2), queries, grid);
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-9);
}

TEST_CASE("theory run produces a consistent report") {
  auto c = small_config();
  const auto res = run_theory(c, TheoryOptions{100, 0.05, 5, 3, 0.05});
  CHECK(res.log.config.track_theory);
  CHECK(res.report.rows.size() == static_cast<std::size_t>(res.log.iterations + 1));
  CHECK(res.report.constants.L_hat == res.lipschitz.L_hat);
  CHECK(res.report.constants.xi_hat == res.xi.xi_hat);
  CHECK(res.xi.xi_hat > 0.0);
  const auto j = res.to_json();
  for (const char* key : {"L_hat", "xi_hat", "per_iteration", "pass"}) CHECK(j.contains(key));
}

TEST_CASE("bias robustness table") {
  auto c = small_config();
  c.max_iterations = 2;
  const auto res = bias_robustness_experiment(c, {0.0, 100.0}, {1, 2});
  CHECK(res.rows.size() == 2 * 2 * 2);
  CHECK(res.reference_runs.size() == 2);
  for (const auto& m : {"rescue", "hvkg_noncausal"}) {
    CHECK(res.median_log_regret.at(m).size() == 2);
    CHECK(std::isfinite(res.regret_ratio.at(m)));
    CHECK(res.p_value.at(m) >= 0.0);
    CHECK(res.p_value.at(m) <= 1.0);
  }
  CHECK(res.to_json().at("rows").size() == 8);
  CHECK_THROWS_AS(bias_robustness_experiment(c, {}, {1}), ConfigError);
}
