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

#include "rescue/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "rescue/errors.hpp"
#include "rescue/log.hpp"

namespace rescue::sampling {

std::vector<double> fidelity_probabilities(const CostModel& cost, const FidelitySpace& space, const Vector& x) {
  if (!space.is_discrete()) throw DomainError("fidelity_probabilities: discrete fidelity space required");
  std::vector<double> w;
  for (double s : space.levels()) w.push_back(1.0 / cost.cost(x, s));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

double fidelity_inverse_cdf(const CostModel& cost, const FidelitySpace& space, double u, const Vector& x) {
  if (!(u >= 0.0 && u < 1.0)) throw DomainError("fidelity_inverse_cdf: u must lie in [0,1)");
  const auto& levels = space.levels();
  if (space.is_discrete()) {
    const auto p = fidelity_probabilities(cost, space, x);
    double cumulative = 0.0;
    for (std::size_t j = 0; j < levels.size(); ++j) {
      cumulative += p[j];
      if (cumulative >= u) return levels[j];
    }
    return levels.back();
  }

  // Continuous: trapezoid integral of 1/c on a uniform grid, then linear
  // interpolation of the normalized cumulative.
  const int n = kContinuousCdfGrid;
  const double lo = space.min();
  const double hi = kTargetFidelity;
  const double h = (hi - lo) / (n - 1);
  std::vector<double> cdf(static_cast<std::size_t>(n), 0.0);
  double prev = 1.0 / cost.cost(x, lo);
  for (int i = 1; i < n; ++i) {
    const double cur = 1.0 / cost.cost(x, lo + i * h);
    cdf[static_cast<std::size_t>(i)] = cdf[static_cast<std::size_t>(i - 1)] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  const double total = cdf.back();
  for (double& v : cdf) v /= total;
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.begin()) return lo;
  if (it == cdf.end()) return hi;
  const auto i = static_cast<int>(it - cdf.begin());
  const double c0 = cdf[static_cast<std::size_t>(i - 1)];
  const double c1 = cdf[static_cast<std::size_t>(i)];
  const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
  return std::min(hi, lo + (i - 1 + frac) * h);
}

Dataset initial_sample(const Problem& problem, const CostModel& cost, const InitSamplerConfig& cfg) {
  const auto& space = problem.config_space();
  const auto& fidelities = problem.fidelity_space();
  const double cheapest = cost.min_cost(fidelities);
  if (!(cfg.budget >= cheapest)) {
    std::ostringstream os;
    os << "initial_sample: budget " << cfg.budget << " below the cheapest evaluation cost " << cheapest;
    throw StateError(os.str());
  }

  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  std::mt19937_64 noise(derive_seed(cfg.seed, 1));
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  Dataset data;
  int skips = 0;
  while (data.cumulative_cost() < cfg.budget) {
    Vector unit(space.dims());
    for (int i = 0; i < space.dims(); ++i) unit[i] = u01(rng);
    const Vector x = space.from_unit(unit);
    const double s = fidelity_inverse_cdf(cost, fidelities, u01(rng), x);
    const double c = cost.cost(x, s);
    if (data.cumulative_cost() + c <= cfg.budget) {
      Evaluation e = problem.evaluate(x, s, &noise);
      data.append(Observation{x, s, std::move(e.y), std::move(e.h), std::move(e.z), c});
      skips = 0;
      continue;
    }
    if (data.cumulative_cost() + cheapest > cfg.budget) break;
    if (++skips >= cfg.max_consecutive_skips) {
      log::info("initial_sample: stopping after consecutive over-budget draws");
      break;
    }
  }
  if (data.cumulative_cost() > cfg.budget) throw StateError("initial_sample: budget exceeded");
  return data;
}

namespace {

std::vector<Vector> lhs(int d, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Vector> pts(static_cast<std::size_t>(n), Vector(d));
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      pts[static_cast<std::size_t>(i)][j] = (perm[static_cast<std::size_t>(i)] + u01(rng)) / n;
    }
  }
  return pts;
}

}  // namespace

std::vector<Vector> unit_candidates(int d, int n, Design design, std::uint64_t seed, bool scramble) {
  if (n < 1) throw DomainError("unit_candidates: n must be >= 1");
  if (d < 1) throw DomainError("unit_candidates: d must be >= 1");
  std::mt19937_64 rng(seed);
  if (design == Design::kSobol && d > 64) {
    log::warn("unit_candidates: Sobol direction table limited to 64 dimensions; using LHS");
    design = Design::kLhs;
  }
  if (design == Design::kLhs) return lhs(d, n, rng);

  using Engine = boost::random::sobol_engine<std::uint32_t, 32>;
  Engine engine(static_cast<std::size_t>(d));
  std::vector<std::uint32_t> shift(static_cast<std::size_t>(d), 0u);
  if (scramble) {
    std::uniform_int_distribution<std::uint32_t> bits;
    for (auto& v : shift) v = bits(rng);
  }
  constexpr double kScale = 1.0 / 4294967296.0;
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(n));
  // The engine starts at the second Sobol point; the first is the origin.
  Vector first(d);
  for (int j = 0; j < d; ++j) first[j] = static_cast<double>(shift[static_cast<std::size_t>(j)]) * kScale;
  pts.push_back(first);
  for (int i = 1; i < n; ++i) {
    Vector p(d);
    for (int j = 0; j < d; ++j) {
      const std::uint32_t v = static_cast<std::uint32_t>(engine()) ^ shift[static_cast<std::size_t>(j)];
      p[j] = static_cast<double>(v) * kScale;
    }
    pts.push_back(p);
  }
  return pts;
}

std::vector<Vector> quasi_random_candidates(const ConfigSpace& space, int n, Design design, std::uint64_t seed,
                                            bool scramble) {
  auto pts = unit_candidates(space.dims(), n, design, seed, scramble);
  for (auto& p : pts) p = space.from_unit(p);
  return pts;
}

}  // namespace rescue::sampling
