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

#include "rescue/errors.hpp"
#include "rescue/log.hpp"
#include "rescue/pareto.hpp"

using namespace rescue;
using namespace rescue::pareto;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector v3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

std::vector<Vector> random_front(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector> pts;
  for (int i = 0; i < n; ++i) pts.push_back(v2(u(rng), u(rng)));
  return pts;
}

// Counts grid cell centres covered by the union of boxes.
double grid_count_hv(const std::vector<Vector>& pts, const Vector& r, const Vector& lo, int n) {
  const double hx = (r[0] - lo[0]) / n, hy = (r[1] - lo[1]) / n;
  long hits = 0;
  for (int i = 0; i < n; ++i) {
    const double cx = lo[0] + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      const double cy = lo[1] + (j + 0.5) * hy;
      for (const auto& p : pts) {
        if (p[0] <= cx && p[1] <= cy) {
          ++hits;
          break;
        }
      }
    }
  }
  return hits * hx * hy;
}

}  // namespace

TEST_CASE("dominance") {
  CHECK(dominates(v2(1, 2), v2(2, 3)));
  CHECK_FALSE(dominates(v2(1, 3), v2(3, 1)));
  CHECK_FALSE(dominates(v2(3, 1), v2(1, 3)));
  CHECK_FALSE(dominates(v2(1, 2), v2(1, 2)));
  CHECK_THROWS_AS(dominates(v2(1, 2), v3(1, 2, 3)), DomainError);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(0, 3);
  for (int k = 0; k < 300; ++k) {
    const Vector a = v2(u(rng), u(rng)), b = v2(u(rng), u(rng)), c = v2(u(rng), u(rng));
    CHECK_FALSE(dominates(a, a));
    CHECK_FALSE((dominates(a, b) && dominates(b, a)));
    if (dominates(a, b) && dominates(b, c)) CHECK(dominates(a, c));
  }
}

TEST_CASE("pareto filter") {
  const auto f = pareto_filter({v2(1, 3), v2(3, 1), v2(2, 2), v2(3, 3)});
  REQUIRE(f.size() == 3);
  CHECK(f[0] == v2(1, 3));
  CHECK(f[1] == v2(2, 2));
  CHECK(f[2] == v2(3, 1));
  CHECK(pareto_filter({v2(4, 5)}).size() == 1);
  CHECK(pareto_filter({v2(1, 1), v2(1, 1), v2(1, 1)}).size() == 1);
  CHECK(pareto_filter({}).empty());

  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    const auto pts = random_front(rng, 30);
    const auto idx = pareto_indices(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      bool dominated = false;
      for (const auto& q : pts) dominated = dominated || dominates(q, pts[i]);
      const bool kept = std::find(idx.begin(), idx.end(), static_cast<int>(i)) != idx.end();
      CHECK(kept == !dominated);
    }
  }
}

TEST_CASE("exact hypervolume examples") {
  CHECK(hypervolume_exact({v2(1, 1)}, v2(2, 2)) == doctest::Approx(1.0));
  CHECK(hypervolume_exact({v2(1, 3), v2(3, 1)}, v2(4, 4)) == doctest::Approx(5.0));
  CHECK(hypervolume_exact({v3(1, 1, 1)}, v3(2, 2, 2)) == doctest::Approx(1.0));
  CHECK(hypervolume_exact({}, v2(1, 1)) == 0.0);
  CHECK(hypervolume_exact(std::vector<Vector>{Vector::Constant(1, 0.25)}, Vector::Constant(1, 1.0)) ==
        doctest::Approx(0.75));
  // Two unit cubes overlapping in a 0.5 x 1 x 1 slab.
  CHECK(hypervolume_exact({v3(0, 0, 0), v3(0.5, 0, 0)}, v3(1, 1, 1)) == doctest::Approx(1.0));
  CHECK(hypervolume_exact({v3(0, 1, 1), v3(1, 0, 1), v3(1, 1, 0)}, v3(2, 2, 2)) == doctest::Approx(4.0));
  Vector r4 = Vector::Ones(4);
  CHECK_THROWS(hypervolume_exact({Vector::Zero(4)}, r4));
}

TEST_CASE("exact hypervolume clips points beyond the reference") {
  const long before = log::warning_count();
  log::set_level(log::Level::kSilent);
  CHECK(hypervolume_exact({v2(1, 1), v2(3, 0.5)}, v2(2, 2)) == doctest::Approx(1.0));
  log::set_level(log::Level::kWarn);
  CHECK(log::warning_count() > before);
}

TEST_CASE("exact 2-d hypervolume matches grid counting") {
  std::mt19937_64 rng(21);
  const int n = 400;
  for (int k = 0; k < 50; ++k) {
    const auto pts = random_front(rng, 1 + k % 12);
    const Vector r = v2(1.0, 1.0), lo = v2(0.0, 0.0);
    const double exact = hypervolume_exact(pts, r);
    const double grid = grid_count_hv(pts, r, lo, n);
    // Each of the staircase edges can miss at most one row/column of cells.
    CHECK(std::abs(exact - grid) <= 2.0 / n + 1e-12);
  }
}

TEST_CASE("3-d slicing agrees with Monte Carlo") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    std::vector<Vector> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(v3(u(rng), u(rng), u(rng)));
    const Vector r = Vector::Ones(3);
    const double exact = hypervolume_exact(pts, r);
    const auto mc = hypervolume_mc(pts, r, 200000, 100 + k);
    CHECK(std::abs(exact - mc.estimate) <= 4.0 * mc.std_error + 1e-12);
  }
}

TEST_CASE("Monte Carlo hypervolume") {
  const auto one = hypervolume_mc({v2(1, 1)}, v2(2, 2), 1000000, 1);
  CHECK(std::abs(one.estimate - 1.0) <= 3.0 * one.std_error + 1e-12);
  CHECK(hypervolume_mc({}, v2(2, 2), 1000, 1).estimate == 0.0);
  CHECK_THROWS(hypervolume_mc({v2(1, 1)}, v2(2, 2), 50, 1));

  std::mt19937_64 rng(33);
  int agree = 0;
  for (int k = 0; k < 100; ++k) {
    const auto pts = random_front(rng, 6);
    const double exact = hypervolume_exact(pts, v2(1, 1));
    const auto mc = hypervolume_mc(pts, v2(1, 1), 20000, 1000 + k);
    if (std::abs(exact - mc.estimate) <= 3.0 * mc.std_error) ++agree;
  }
  CHECK(agree >= 99);
}

TEST_CASE("hypervolume monotonicity and filter invariance") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    auto pts = random_front(rng, 10);
    const Vector r = v2(1.0, 1.0);
    const double hv = hypervolume_exact(pts, r);
    CHECK(hypervolume_exact(pareto_filter(pts), r) == doctest::Approx(hv).epsilon(1e-14));
    pts.push_back(v2(u(rng), u(rng)));
    CHECK(hypervolume_exact(pts, r) >= hv - 1e-15);
  }
}

TEST_CASE("log regret") {
  CHECK(log_hv_regret(10.0, 9.0) == doctest::Approx(0.0));
  CHECK(log_hv_regret(10.0, 10.0) == doctest::Approx(-12.0));
  CHECK(log_hv_regret(10.0, 9.9) == doctest::Approx(-1.0));
  log::set_level(log::Level::kSilent);
  const long before = log::warning_count();
  CHECK(log_hv_regret(10.0, 10.5) == doctest::Approx(-12.0));
  CHECK(log::warning_count() == before + 1);
  log::set_level(log::Level::kWarn);
}

TEST_CASE("area under regret") {
  CHECK(area_under_regret({{0, 2}, {10, 2}}) == doctest::Approx(20.0));
  CHECK(area_under_regret({{0, 1}, {10, 0}}) == doctest::Approx(5.0));
  CHECK(area_under_regret({{0, 4}, {5, 2}, {10, 2}}) == doctest::Approx(25.0));
  CHECK(area_under_regret({{3, 4}}) == 0.0);
  CHECK_THROWS(area_under_regret({{0, 1}, {0, 2}}));
}
