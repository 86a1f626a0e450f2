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
#include <numbers>
#include <random>

#include "rescue/benchmarks.hpp"
#include "rescue/errors.hpp"

using namespace rescue;
using namespace rescue::benchmarks;

namespace {
Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("healthcare closed forms") {
  const auto o = healthcare_eval(27.0, 0.0, 1.0);
  CHECK(o.statin == doctest::Approx(0.2497).epsilon(1e-3));
  CHECK(o.cancer == doctest::Approx(0.3122).epsilon(1e-3));
  CHECK(o.psa == doctest::Approx(-7.706).epsilon(1e-4));
  // PSA prefactor at S=1 is 7.8.
  const double inner = 0.04 * 65 - 0.15 * 27 + 0.6 * o.statin + o.cancer;
  CHECK(o.psa == doctest::Approx(7.8 * inner));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto r = healthcare_eval(20 + 10 * u(rng), u(rng), u(rng));
    CHECK(r.statin > 0.0);
    CHECK(r.statin < 1.0);
    CHECK(r.cancer > 0.0);
    CHECK(r.cancer < 1.0);
  }
}

TEST_CASE("healthcare problem") {
  HealthcareProblem p;
  CHECK(p.num_objectives() == 2);
  CHECK(p.num_constraints() == 1);
  CHECK(p.constraints()[0].threshold == 0.35);
  CHECK(HealthcareProblem(HealthcareProblem::kCancerThresholdStrict).constraints()[0].threshold == 0.30);
  const auto e = p.evaluate(v2(27.0, 0.0), 1.0);
  CHECK(e.y[0] == doctest::Approx(0.2497).epsilon(1e-3));
  CHECK(e.y[1] == doctest::Approx(-7.706).epsilon(1e-4));
  CHECK(e.h[0] == doctest::Approx(0.3122).epsilon(1e-3));
  CHECK(p.feasible(e.h));
}

TEST_CASE("collision risk worked example") {
  CollisionRiskInputs in{0.5, -2.0, 0.5, 2.0, 0.05, 30.0, 30.0, 0.05, 20.0, 20.0};
  REQUIRE(in_bounds(in));
  const auto t = collision_risk_terms(in);
  CHECK(t.speed == doctest::Approx(0.1244).epsilon(1e-3));
  CHECK(t.safety == doctest::Approx(0.5050).epsilon(1e-3));
  CHECK(t.reaction == doctest::Approx(0.6689).epsilon(1e-3));
  CHECK(t.perception == doctest::Approx(0.1961).epsilon(1e-3));
  CHECK(t.goal == 1.0);
  CHECK(t.sampling == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(t.score - 4.964) <= 1e-3);
}

TEST_CASE("collision risk range and limits") {
  const auto bounds = collision_risk_bounds();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) {
    Vector v(10);
    for (int j = 0; j < 10; ++j) v[j] = bounds[j].lo + bounds[j].width() * u(rng);
    const double s = collision_risk_score(collision_risk_inputs_from(v));
    REQUIRE(s >= 0.0);
    REQUIRE(s <= 10.0);
  }
  CollisionRiskInputs big{};
  big.vx_samples = 1e8;
  big.vtheta_samples = 1e8;
  CHECK(collision_risk_terms(big).sampling < 1e-12);
  CHECK_FALSE(in_bounds(big));
}

TEST_CASE("branin and currin") {
  // Classical minimizers (pi, 2.275), (-pi, 12.275), (9.42478, 2.475) mapped to the unit square.
  const double pi = std::numbers::pi;
  for (auto [a, b] : {std::pair{pi, 2.275}, std::pair{-pi, 12.275}, std::pair{9.42478, 2.475}}) {
    CHECK(branin_unit((a + 5.0) / 15.0, b / 15.0) == doctest::Approx(0.397887).epsilon(1e-4));
  }
  const double f = (1.0 - std::exp(-1.0)) * (2300 * 0.125 + 1900 * 0.25 + 2092 * 0.5 + 60) /
                   (100 * 0.125 + 500 * 0.25 + 4 * 0.5 + 20);
  CHECK(currin(0.5, 0.5) == doctest::Approx(f));
  CHECK(std::isfinite(currin(0.3, 0.0)));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vector x = v2(u(rng), u(rng));
    const Vector y = branin_currin_eval(x, 1.0);
    CHECK(y[0] == branin_unit(x[0], x[1]));
    CHECK(y[1] == currin(x[0], x[1]));
  }
}

TEST_CASE("park functions") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = u(rng);
    const double textbook = x[0] / 2.0 * (std::sqrt(1.0 + (x[1] + x[2] * x[2]) * x[3] / (x[0] * x[0])) - 1.0) +
                            (x[0] + 3.0 * x[3]) * std::exp(1.0 + std::sin(x[2]));
    CHECK(park1(x) == doctest::Approx(textbook).epsilon(1e-10));
    const Vector y = park_eval(x, 1.0);
    CHECK(y[0] == park1(x));
    CHECK(y[1] == park2(x));
  }
  CHECK(std::isfinite(park1(Vector::Zero(4))));
}

TEST_CASE("adversarial bias") {
  AdversarialBiasProblem zero(0.0), big(100.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vector x = v2(u(rng), u(rng));
    CHECK(adversarial_eval(zero, x, 0.2) == adversarial_eval(zero, x, 1.0));
    CHECK(adversarial_eval(big, x, 1.0) == adversarial_base(x));
  }
  double sup = 0.0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const Vector x = v2(i / 99.0, j / 99.0);
      sup = std::max(sup, (adversarial_eval(big, x, 0.5) - adversarial_eval(big, x, 1.0)).norm());
    }
  }
  CHECK(std::abs(sup - 100.0 * adversarial_bias_field_sup()) <= 0.01 * 100.0 * adversarial_bias_field_sup());
  std::mt19937_64 r(1);
  CHECK(big.sample_observational_fidelity(r) == 1.0);
  CHECK_THROWS(AdversarialBiasProblem(-1.0));
}

TEST_CASE("registry") {
  for (const auto& name : problem_names()) {
    auto p = make_problem(name);
    CHECK(p->name() == name);
    REQUIRE(p->reference_point().has_value());
    CHECK(p->reference_point()->size() == p->num_objectives());
  }
  CHECK_THROWS_AS(make_problem("nope"), ConfigError);
  CHECK(make_problem("healthcare", {0.0, 0.30})->constraints()[0].threshold == 0.30);
}

TEST_CASE("grid configs") {
  ConfigSpace space({{0.0, 1.0}, {20.0, 30.0}});
  const auto g = grid_configs(space, {3, 2});
  REQUIRE(g.size() == 6);
  CHECK(g.front() == v2(0.0, 20.0));
  CHECK(g.back() == v2(1.0, 30.0));
  CHECK_THROWS(grid_configs(space, {3}));
}

TEST_CASE("oracle fronts") {
  auto hc = make_problem("healthcare");
  const Vector r = *hc->reference_point();
  const auto a = oracle_pareto(*hc, {200, 50}, r);
  const auto b = oracle_pareto(*hc, {200, 50}, r);
  CHECK(a.hv_star == b.hv_star);
  CHECK(a.hv_star > 0.0);
  CHECK(a.grid_points == 10000);
  CHECK(a.feasible_points > 0);
  CHECK(a.feasible_points < a.grid_points);

  auto bc = make_problem("branin-currin");
  const Vector rb = *bc->reference_point();
  // Grids with n and 2n-1 points share every node of the coarser grid.
  double prev = 0.0;
  for (int n : {6, 11, 21, 41}) {
    const double hv = oracle_pareto(*bc, {n, n}, rb).hv_star;
    CHECK(hv >= prev - 1e-9);
    prev = hv;
  }

  const auto ref = *make_problem("adversarial")->reference_point();
  const double h0 = oracle_pareto(AdversarialBiasProblem(0.0), {51, 51}, ref).hv_star;
  const double h1 = oracle_pareto(AdversarialBiasProblem(100.0), {51, 51}, ref).hv_star;
  CHECK(h0 == h1);
  CHECK_THROWS(oracle_pareto(*bc, {2, 2, 2}, rb));
}
