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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "rescue/errors.hpp"
#include "rescue/moea.hpp"
#include "rescue/pareto.hpp"

using namespace rescue;
using namespace rescue::moea;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

const ConfigSpace kUnit({{0.0, 1.0}, {0.0, 1.0}});

moea::Fitness two_spheres(const Vector& x) {
  return {v2(x.squaredNorm(), (x - v2(1.0, 1.0)).squaredNorm()), 0.0};
}

std::vector<Vector> analytic_front(int n) {
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    out.push_back(v2(2.0 * t * t, 2.0 * (1.0 - t) * (1.0 - t)));
  }
  return out;
}

}  // namespace

TEST_CASE("non-dominated sort examples") {
  auto fr = non_dominated_sort({v2(1, 1), v2(2, 2), v2(3, 3)});
  CHECK(fr == std::vector<std::vector<int>>{{0}, {1}, {2}});
  fr = non_dominated_sort({v2(1, 3), v2(3, 1), v2(2, 2)});
  CHECK(fr == std::vector<std::vector<int>>{{0, 1, 2}});
  fr = non_dominated_sort({v2(1, 3), v2(3, 1), v2(2, 2), v2(4, 4), v2(3, 3)});
  CHECK(fr == std::vector<std::vector<int>>{{0, 1, 2}, {4}, {3}});
  CHECK(non_dominated_sort({}).empty());
}

TEST_CASE("non-dominated sort matches repeated filtering") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> u(0, 6);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vector> pts;
    const int m = 2 + t % 2;
    for (int i = 0; i < 30; ++i) {
      Vector p(m);
      for (int k = 0; k < m; ++k) p[k] = u(rng);
      pts.push_back(p);
    }
    const auto fronts = non_dominated_sort(pts);
    std::vector<int> remaining(pts.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::size_t covered = 0;
    for (const auto& f : fronts) {
      // Brute force: members of the remainder dominated by nothing remaining.
      std::vector<int> expect;
      for (int i : remaining) {
        bool dom = false;
        for (int j : remaining) dom = dom || pareto::dominates(pts[j], pts[i]);
        if (!dom) expect.push_back(i);
      }
      auto got = f;
      std::sort(got.begin(), got.end());
      CHECK(got == expect);
      std::vector<int> rest;
      std::set_difference(remaining.begin(), remaining.end(), got.begin(), got.end(), std::back_inserter(rest));
      remaining = rest;
      covered += f.size();
    }
    CHECK(covered == pts.size());
  }
}

TEST_CASE("crowding distance examples") {
  auto cd = crowding_distance({v2(0, 1), v2(1, 0)});
  CHECK(std::isinf(cd[0]));
  CHECK(std::isinf(cd[1]));
  cd = crowding_distance({v2(0, 2), v2(1, 1), v2(2, 0)});
  CHECK(std::isinf(cd[0]));
  CHECK(cd[1] == doctest::Approx(2.0));
  CHECK(std::isinf(cd[2]));
  // Constant second objective contributes nothing.
  cd = crowding_distance({v2(0, 5), v2(1, 5), v2(4, 5)});
  CHECK(cd[1] == doctest::Approx(1.0));
}

TEST_CASE("config validation") {
  Nsga2Config c;
  CHECK_NOTHROW(c.validate());
  c.population = 7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.crossover_probability = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("two-sphere front and elitism") {
  const auto ref_front = analytic_front(1001);
  std::vector<double> igds;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Nsga2Config cfg;
    cfg.seed = seed;
    cfg.reference = v2(2.2, 2.2);
    const auto res = nsga2_optimize(two_spheres, kUnit, cfg);
    CHECK_FALSE(res.infeasible);
    REQUIRE(res.hv_history.size() == 51);
    for (std::size_t g = 1; g < res.hv_history.size(); ++g) CHECK(res.hv_history[g] >= res.hv_history[g - 1]);
    int bad = 0;
    for (std::size_t i = 0; i < res.f.size(); ++i) {
      bad += kUnit.contains(res.x[i]) ? 0 : 1;
      for (std::size_t j = 0; j < res.f.size(); ++j) bad += pareto::dominates(res.f[j], res.f[i]) ? 1 : 0;
    }
    CHECK(bad == 0);
    CHECK(res.evaluations == 100L * 51);
    igds.push_back(igd(ref_front, res.f));
  }
  std::nth_element(igds.begin(), igds.begin() + 5, igds.end());
  MESSAGE("median IGD " << igds[5]);
  CHECK(igds[5] <= 0.02);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 120.0);
}

TEST_CASE("fixed seed reproduces the result") {
  Nsga2Config cfg;
  cfg.seed = 5;
  cfg.generations = 10;
  const auto a = nsga2_optimize(two_spheres, kUnit, cfg);
  const auto b = nsga2_optimize(two_spheres, kUnit, cfg);
  CHECK(a.x == b.x);
  CHECK(a.f == b.f);
  CHECK(a.hv_history == b.hv_history);
}

TEST_CASE("degenerate single objective") {
  const Objective f = [](const Vector& x) {
    const double v = (x - v2(0.3, 0.7)).squaredNorm() + 1.0;
    return moea::Fitness{v2(v, v), 0.0};
  };
  const auto res = nsga2_optimize(f, kUnit, {});
  REQUIRE(res.f.size() == 1);
  CHECK(res.f[0][0] == doctest::Approx(1.0).epsilon(1e-2));
  CHECK((res.x[0] - v2(0.3, 0.7)).norm() <= 1e-1);
}

TEST_CASE("constraints") {
  // Feasible region x1 + x2 >= 1.2 cuts the unconstrained front.
  const Objective f = [](const Vector& x) {
    auto e = two_spheres(x);
    e.violation = std::max(0.0, 1.2 - x[0] - x[1]);
    return e;
  };
  Nsga2Config cfg;
  cfg.generations = 30;
  const auto res = nsga2_optimize(f, kUnit, cfg);
  CHECK_FALSE(res.infeasible);
  for (const auto& x : res.x) CHECK(x[0] + x[1] >= 1.2 - 1e-12);

  const Objective never = [](const Vector& x) {
    auto e = two_spheres(x);
    e.violation = 1.0 + x[0];
    return e;
  };
  cfg.generations = 10;
  const auto bad = nsga2_optimize(never, kUnit, cfg);
  CHECK(bad.infeasible);
  REQUIRE_FALSE(bad.x.empty());
  for (const auto& x : bad.x) CHECK(x[0] <= 0.05);
}

TEST_CASE("igd") {
  CHECK(igd({v2(0, 0)}, {v2(3, 4)}) == doctest::Approx(5.0));
  CHECK(igd(analytic_front(11), analytic_front(11)) == 0.0);
  CHECK(std::isinf(igd({v2(0, 0)}, {})));
}
