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
#include <random>

#include "rescue/core.hpp"
#include "rescue/errors.hpp"

using namespace rescue;

TEST_CASE("exponential cost") {
  const auto c = CostModel::exponential(4.8);
  const Vector x = Vector::Zero(2);
  CHECK(c.cost(x, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.cost(x, 1.0) == doctest::Approx(121.5104175).epsilon(1e-8));
  CHECK(c.cost(x, 0.5) == doctest::Approx(11.0231764).epsilon(1e-8));
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = c.cost(x, i / 100.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(c.cost(x, std::nan("")), DomainError);
  CHECK_THROWS_AS(c.cost(x, INFINITY), DomainError);
}

TEST_CASE("table and custom cost") {
  CostModel t(CostModel::Table{{{0.2, 1.0}, {1.0, 10.0}}});
  CHECK(t.cost(Vector(), 0.2) == 1.0);
  CHECK(t.cost(Vector(), 1.0) == 10.0);
  CHECK(t.min_cost(FidelitySpace::discrete({0.2, 1.0})) == 1.0);
  CostModel bad(CostModel::Custom{[](const Vector&, double) { return 0.0; }, "zero"});
  CHECK_THROWS(bad.cost(Vector(), 1.0));
}

TEST_CASE("normalize config") {
  ConfigSpace a({{0.0, 2.0}});
  CHECK(normalize_config(a, Vector::Constant(1, 1.0))[0] == doctest::Approx(0.5));
  ConfigSpace b({{20.0, 30.0}});
  CHECK(normalize_config(b, Vector::Constant(1, 20.0))[0] == 0.0);
  ConfigSpace c({{-3.0, 0.0}});
  CHECK(normalize_config(c, Vector::Constant(1, -1.5))[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(normalize_config(a, Vector::Constant(1, 2.5)), DomainError);

  ConfigSpace box({{-3.0, 1.0}, {20.0, 30.0}, {0.0, 1e-3}});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Vector unit(3);
    for (int i = 0; i < 3; ++i) unit[i] = u(rng);
    const Vector x = box.from_unit(unit);
    const Vector back = denormalize_config(box, normalize_config(box, x));
    CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("config space invariants") {
  CHECK_THROWS(ConfigSpace(std::vector<Interval>{}));
  CHECK_THROWS(ConfigSpace({{1.0, 1.0}}));
}

TEST_CASE("fidelity spaces") {
  auto d = FidelitySpace::discrete({1.0, 0.2, 0.5, 0.5});
  REQUIRE(d.levels().size() == 3);
  CHECK(d.levels()[0] == 0.2);
  CHECK(d.contains(0.5));
  CHECK_FALSE(d.contains(0.3));
  CHECK_THROWS(FidelitySpace::discrete({0.2, 0.5}));
  CHECK_THROWS(FidelitySpace::discrete({0.0, 1.0}));
  auto c = FidelitySpace::continuous(0.0);
  CHECK(c.contains(0.37));
  CHECK(c.candidate_levels(8).size() == 8);
  CHECK(c.candidate_levels(8).back() == 1.0);
}

TEST_CASE("standardize outputs") {
  auto make = [](std::vector<double> col) {
    Dataset ds;
    for (double v : col) ds.append(Observation{Vector::Zero(1), 1.0, Vector::Constant(1, v), Vector(), Vector(), 1.0});
    return ds;
  };
  auto a = standardize_outputs(make({1.0, 3.0}));
  CHECK(a.means[0] == doctest::Approx(2.0));
  CHECK(a.stds[0] == doctest::Approx(1.0));
  CHECK(a.transformed[0].y[0] == doctest::Approx(-1.0));
  CHECK(a.transformed[1].y[0] == doctest::Approx(1.0));
  auto b = standardize_outputs(make({5.0, 5.0}));
  CHECK(b.stds[0] == doctest::Approx(1e-9));
  CHECK(b.transformed[0].y[0] == 0.0);
  auto c = standardize_outputs(make({0.0, 1.0, 2.0}));
  CHECK(c.transformed[0].y[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(c.transformed[1].y[0] == doctest::Approx(0.0));
  CHECK(c.transformed[2].y[0] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK_THROWS_AS(standardize_outputs(Dataset()), StateError);
}

TEST_CASE("dataset cost accounting") {
  Dataset ds;
  double naive = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 2000; ++i) {
    const double c = std::pow(10.0, u(rng));
    ds.append(Observation{Vector::Zero(1), 1.0, Vector::Zero(1), Vector(), Vector(), c});
    naive += c;
    CHECK(ds.cumulative_cost() == doctest::Approx(naive).epsilon(1e-12));
  }
  CHECK_THROWS(ds.append(Observation{Vector::Zero(1), 1.0, Vector::Zero(1), Vector(), Vector(), -1.0}));
  CHECK_THROWS(
      ds.append(Observation{Vector::Zero(1), 1.0, Vector::Constant(1, NAN), Vector(), Vector(), 1.0}));
}

namespace {
class Quad : public Problem {
 public:
  Quad() {
    config_space_ = ConfigSpace({{0.0, 1.0}});
    fidelity_space_ = FidelitySpace::discrete({0.5, 1.0});
    objective_names_ = {"a", "b"};
    maximize_ = {false, true};
    constraints_ = {Constraint{"h", 0.5, ConstraintDirection::kAtLeast}};
  }
  std::string name() const override { return "quad"; }
  Evaluation evaluate_raw(const Vector& x, double s) const override {
    Vector y(2);
    y << x[0] * x[0], s * x[0];
    return Evaluation{y, Vector::Constant(1, x[0]), Vector()};
  }
};
}  // namespace

TEST_CASE("problem evaluation conventions") {
  Quad q;
  const auto e = q.evaluate(Vector::Constant(1, 0.6), 1.0);
  CHECK(e.y[0] == doctest::Approx(0.36));
  CHECK(e.y[1] == doctest::Approx(-0.6));
  CHECK(q.feasible(e.h));
  CHECK_FALSE(q.feasible(Vector::Constant(1, 0.4)));
  CHECK(q.total_violation(Vector::Constant(1, 0.4)) == doctest::Approx(0.1));
  CHECK_THROWS_AS(q.evaluate(Vector::Constant(1, 1.5), 1.0), DomainError);
  CHECK_THROWS_AS(q.evaluate(Vector::Constant(1, 0.5), 0.7), DomainError);

  q.set_noise_std(0.1);
  std::mt19937_64 r1(11), r2(11);
  const auto n1 = q.evaluate(Vector::Constant(1, 0.6), 1.0, &r1);
  const auto n2 = q.evaluate(Vector::Constant(1, 0.6), 1.0, &r2);
  CHECK(n1.y == n2.y);
  CHECK(n1.y[0] != doctest::Approx(0.36));
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}
