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
  \file pareto.hpp

  Dominance, Pareto filtering, hypervolume and regret metrics.

  All objective vectors follow the minimization convention: a point y' covers
  the box [y', r] where r is the reference point.
*/

#ifndef RESCUE_PARETO_HPP
#define RESCUE_PARETO_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "rescue/core.hpp"

namespace rescue::pareto {

inline constexpr double kRegretFloor = 1e-12;

struct ParetoFront {
  std::vector<Vector> points;
  Vector reference;
};

struct RegretRecord {
  double hv_star = 0.0;
  double inferred_hv = 0.0;
  double log_regret = 0.0;
  double cumulative_cost = 0.0;
};

/// a <= b componentwise with at least one strict component.
bool dominates(const Vector& a, const Vector& b);

/// Indices of the maximal non-dominated subset, duplicates removed (first
/// occurrence kept), ordered by first objective then index.
std::vector<int> pareto_indices(const std::vector<Vector>& points);
std::vector<Vector> pareto_filter(const std::vector<Vector>& points);

/// Exact hypervolume for M <= 3. Points that do not strictly dominate the
/// reference are clipped to it (and so contribute nothing) with a warning.
double hypervolume_exact(const std::vector<Vector>& points, const Vector& reference);
double hypervolume_exact(const ParetoFront& front);

/// Same as hypervolume_exact() but silent about points beyond the reference.
/// Used on model predictions, where such points are expected.
double hypervolume(const std::vector<Vector>& points, const Vector& reference);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Uniform Monte Carlo estimate over the box [componentwise min, reference].
McEstimate hypervolume_mc(const std::vector<Vector>& points, const Vector& reference, long n,
                          std::uint64_t seed);

/// log10 of (hv_star - inferred_hv), floored at kRegretFloor.
double log_hv_regret(double hv_star, double inferred_hv);

/// Trapezoidal integral of regret against cumulative cost. Costs must be
/// strictly increasing.
double area_under_regret(const std::vector<std::pair<double, double>>& curve);

}  // namespace rescue::pareto

#endif  // RESCUE_PARETO_HPP
