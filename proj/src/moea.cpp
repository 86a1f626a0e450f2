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

#include "rescue/moea.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rescue/errors.hpp"
#include "rescue/pareto.hpp"

namespace rescue::moea {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Individual {
  Vector x;
  Fitness eval;
  int rank = 0;
  double crowding = 0.0;
};

// Deb's constrained domination.
bool c_dominates(const Fitness& a, const Fitness& b) {
  if (a.feasible() != b.feasible()) return a.feasible();
  if (!a.feasible()) return a.violation < b.violation;
  return pareto::dominates(a.objectives, b.objectives);
}

template <class Dom>
std::vector<std::vector<int>> sort_fronts(int n, Dom dom) {
  std::vector<std::vector<int>> dominated(static_cast<std::size_t>(n));
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> fronts(1);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dom(i, j)) {
        dominated[i].push_back(j);
        ++count[j];
      } else if (dom(j, i)) {
        dominated[j].push_back(i);
        ++count[i];
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (count[i] == 0) fronts[0].push_back(i);
  }
  if (fronts[0].empty()) return {};
  while (true) {
    std::vector<int> next;
    for (int i : fronts.back()) {
      for (int j : dominated[i]) {
        if (--count[j] == 0) next.push_back(j);
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(next));
  }
  return fronts;
}

Vector auto_reference(const std::vector<Vector>& pts) {
  Vector worst = pts.front(), best = pts.front();
  for (const auto& p : pts) {
    worst = worst.cwiseMax(p);
    best = best.cwiseMin(p);
  }
  Vector range = worst - best;
  for (int m = 0; m < range.size(); ++m) {
    if (range[m] <= 1e-12) range[m] = std::max(1.0, std::abs(worst[m]));
  }
  return worst + 0.1 * range;
}

class Archive {
 public:
  void offer(const Vector& x, const Vector& f) {
    for (const auto& g : f_) {
      if (pareto::dominates(g, f) || g == f) return;
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < f_.size(); ++i) {
      if (pareto::dominates(f, f_[i])) continue;
      f_[k] = std::move(f_[i]);
      x_[k] = std::move(x_[i]);
      ++k;
    }
    f_.resize(k);
    x_.resize(k);
    f_.push_back(f);
    x_.push_back(x);
  }
  const std::vector<Vector>& f() const { return f_; }
  const std::vector<Vector>& x() const { return x_; }
  bool empty() const { return f_.empty(); }

 private:
  std::vector<Vector> x_, f_;
};

class Operators {
 public:
  Operators(const ConfigSpace& space, const Nsga2Config& cfg)
      : lo_(space.lower()), hi_(space.upper()), cfg_(cfg), rng_(cfg.seed) {
    pm_ = cfg.mutation_probability < 0.0 ? 1.0 / space.dims() : cfg.mutation_probability;
  }

  double uniform() { return u_(rng_); }
  int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Vector random_point() {
    Vector x(lo_.size());
    for (int j = 0; j < x.size(); ++j) x[j] = lo_[j] + uniform() * (hi_[j] - lo_[j]);
    return x;
  }

  // Bounded simulated binary crossover.
  void sbx(Vector& a, Vector& b) {
    if (uniform() > cfg_.crossover_probability) return;
    const double eta = cfg_.crossover_eta;
    for (int j = 0; j < a.size(); ++j) {
      if (uniform() > 0.5) continue;
      if (std::abs(a[j] - b[j]) <= 1e-14) continue;
      const double y1 = std::min(a[j], b[j]), y2 = std::max(a[j], b[j]);
      const double lo = lo_[j], hi = hi_[j];
      const double r = uniform();
      auto child = [&](double beta) {
        const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        const double betaq = r <= 1.0 / alpha ? std::pow(r * alpha, 1.0 / (eta + 1.0))
                                              : std::pow(1.0 / (2.0 - r * alpha), 1.0 / (eta + 1.0));
        return betaq;
      };
      const double bq1 = child(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
      const double bq2 = child(1.0 + 2.0 * (hi - y2) / (y2 - y1));
      double c1 = std::clamp(0.5 * ((y1 + y2) - bq1 * (y2 - y1)), lo, hi);
      double c2 = std::clamp(0.5 * ((y1 + y2) + bq2 * (y2 - y1)), lo, hi);
      if (uniform() <= 0.5) std::swap(c1, c2);
      a[j] = c1;
      b[j] = c2;
    }
  }

  // Bounded polynomial mutation.
  void mutate(Vector& x) {
    const double eta = cfg_.mutation_eta;
    for (int j = 0; j < x.size(); ++j) {
      if (uniform() > pm_) continue;
      const double lo = lo_[j], hi = hi_[j], span = hi - lo;
      if (span <= 0.0) continue;
      const double d1 = (x[j] - lo) / span, d2 = (hi - x[j]) / span;
      const double r = uniform();
      const double p = 1.0 / (eta + 1.0);
      double dq;
      if (r < 0.5) {
        const double v = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
        dq = std::pow(v, p) - 1.0;
      } else {
        const double v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
        dq = 1.0 - std::pow(v, p);
      }
      x[j] = std::clamp(x[j] + dq * span, lo, hi);
    }
  }

 private:
  Vector lo_, hi_;
  Nsga2Config cfg_;
  double pm_ = 0.0;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> u_{0.0, 1.0};
};

// Assigns rank and crowding, returns fronts over pop indices.
std::vector<std::vector<int>> rank_population(std::vector<Individual>& pop) {
  const int n = static_cast<int>(pop.size());
  auto fronts = sort_fronts(n, [&](int i, int j) { return c_dominates(pop[i].eval, pop[j].eval); });
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    std::vector<Vector> objs;
    for (int i : fronts[r]) objs.push_back(pop[i].eval.objectives);
    const auto cd = crowding_distance(objs);
    for (std::size_t k = 0; k < fronts[r].size(); ++k) {
      pop[fronts[r][k]].rank = static_cast<int>(r);
      pop[fronts[r][k]].crowding = cd[k];
    }
  }
  return fronts;
}

}  // namespace

void Nsga2Config::validate() const {
  if (population < 4 || population % 2 != 0) throw ConfigError("nsga2: population must be even and >= 4");
  if (generations < 0) throw ConfigError("nsga2: generations must be >= 0");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0)) {
    throw ConfigError("nsga2: crossover probability outside [0,1]");
  }
  if (mutation_probability > 1.0) throw ConfigError("nsga2: mutation probability above 1");
  if (!(crossover_eta >= 0.0) || !(mutation_eta >= 0.0)) throw ConfigError("nsga2: distribution index must be >= 0");
}

std::vector<std::vector<int>> non_dominated_sort(const std::vector<Vector>& points) {
  return sort_fronts(static_cast<int>(points.size()),
                     [&](int i, int j) { return pareto::dominates(points[i], points[j]); });
}

std::vector<double> crowding_distance(const std::vector<Vector>& front) {
  const std::size_t n = front.size();
  std::vector<double> d(n, 0.0);
  if (n <= 2) return std::vector<double>(n, kInf);
  const int m = static_cast<int>(front.front().size());
  std::vector<int> order(n);
  for (int k = 0; k < m; ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return front[a][k] < front[b][k]; });
    const double range = front[order.back()][k] - front[order.front()][k];
    d[order.front()] = kInf;
    d[order.back()] = kInf;
    if (range <= 0.0) continue;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      d[order[i]] += (front[order[i + 1]][k] - front[order[i - 1]][k]) / range;
    }
  }
  return d;
}

Nsga2Result nsga2_optimize(const Objective& objective, const ConfigSpace& space, const Nsga2Config& cfg) {
  cfg.validate();
  if (space.dims() == 0) throw ConfigError("nsga2: empty configuration space");
  Operators ops(space, cfg);
  Archive archive;
  Nsga2Result res;
  res.reference = cfg.reference;

  auto evaluate = [&](const Vector& x) {
    Individual ind{x, objective(x)};
    ++res.evaluations;
    if (ind.eval.feasible()) archive.offer(x, ind.eval.objectives);
    return ind;
  };
  auto record = [&]() {
    if (archive.empty()) {
      res.hv_history.push_back(0.0);
      return;
    }
    if (archive.f().front().size() > 3) return;
    if (res.reference.size() == 0) res.reference = auto_reference(archive.f());
    res.hv_history.push_back(pareto::hypervolume(archive.f(), res.reference));
  };
  auto tournament = [&](const std::vector<Individual>& pop) -> const Individual& {
    const Individual& a = pop[ops.index(static_cast<int>(pop.size()))];
    const Individual& b = pop[ops.index(static_cast<int>(pop.size()))];
    if (a.rank != b.rank) return a.rank < b.rank ? a : b;
    if (a.crowding != b.crowding) return a.crowding > b.crowding ? a : b;
    return ops.uniform() < 0.5 ? a : b;
  };

  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population));
  for (int i = 0; i < cfg.population; ++i) pop.push_back(evaluate(ops.random_point()));
  rank_population(pop);
  record();

  for (int g = 0; g < cfg.generations; ++g) {
    std::vector<Individual> merged = pop;
    while (static_cast<int>(merged.size()) < 2 * cfg.population) {
      Vector a = tournament(pop).x;
      Vector b = tournament(pop).x;
      ops.sbx(a, b);
      ops.mutate(a);
      ops.mutate(b);
      merged.push_back(evaluate(a));
      merged.push_back(evaluate(b));
    }
    const auto fronts = rank_population(merged);
    std::vector<Individual> next;
    next.reserve(static_cast<std::size_t>(cfg.population));
    for (const auto& front : fronts) {
      if (next.size() + front.size() <= static_cast<std::size_t>(cfg.population)) {
        for (int i : front) next.push_back(merged[i]);
        continue;
      }
      std::vector<int> rest = front;
      std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) { return merged[a].crowding > merged[b].crowding; });
      rest.resize(static_cast<std::size_t>(cfg.population) - next.size());
      for (int i : rest) next.push_back(merged[i]);
      break;
    }
    pop = std::move(next);
    rank_population(pop);
    record();
  }

  if (!archive.empty()) {
    // Sorted by first objective for stable output.
    std::vector<int> order(archive.f().size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const auto& fa = archive.f()[a];
      const auto& fb = archive.f()[b];
      return std::lexicographical_compare(fa.data(), fa.data() + fa.size(), fb.data(), fb.data() + fb.size());
    });
    for (int i : order) {
      res.x.push_back(archive.x()[i]);
      res.f.push_back(archive.f()[i]);
    }
    return res;
  }
  res.infeasible = true;
  const auto fronts = rank_population(pop);
  for (int i : fronts.front()) {
    res.x.push_back(pop[i].x);
    res.f.push_back(pop[i].eval.objectives);
  }
  return res;
}

double igd(const std::vector<Vector>& reference_front, const std::vector<Vector>& approximation) {
  if (reference_front.empty()) throw DomainError("igd: empty reference front");
  if (approximation.empty()) return kInf;
  double total = 0.0;
  for (const auto& r : reference_front) {
    double best = kInf;
    for (const auto& a : approximation) best = std::min(best, (r - a).norm());
    total += best;
  }
  return total / static_cast<double>(reference_front.size());
}

}  // namespace rescue::moea
