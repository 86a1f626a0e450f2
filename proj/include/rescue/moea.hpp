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
  \file moea.hpp

  NSGA-II with constrained domination.
*/

#ifndef RESCUE_MOEA_HPP
#define RESCUE_MOEA_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "rescue/core.hpp"

namespace rescue::moea {

struct Nsga2Config {
  int population = 100;
  int generations = 50;
  double crossover_eta = 15.0;
  double crossover_probability = 0.9;
  double mutation_eta = 20.0;
  /// Per-variable mutation probability; negative means 1/d.
  double mutation_probability = -1.0;
  std::uint64_t seed = 0;
  /// Reference point for the per-generation HV history. Empty: worst
  /// feasible value of the first feasible generation plus 10% of its range.
  Vector reference;

  /// Throws ConfigError.
  void validate() const;
};

/// violation <= 0 means feasible; positive values rank infeasible points.
struct Fitness {
  Vector objectives;
  double violation = 0.0;

  bool feasible() const { return violation <= 0.0; }
};

using Objective = std::function<Fitness(const Vector&)>;

struct Nsga2Result {
  std::vector<Vector> x;
  std::vector<Vector> f;
  /// Set when no evaluated point was feasible; x/f then hold the
  /// least-violation front of the final population.
  bool infeasible = false;
  /// Archive HV after the initial population and after each generation.
  /// Empty when M > 3.
  std::vector<double> hv_history;
  Vector reference;
  long evaluations = 0;
};

/// Fronts of indices. Equal points land in the same front.
std::vector<std::vector<int>> non_dominated_sort(const std::vector<Vector>& points);

/// Boundary points get +inf; a front of size <= 2 is all +inf. Objectives
/// with zero range are skipped.
std::vector<double> crowding_distance(const std::vector<Vector>& front);

/// The result holds the non-dominated set of every feasible point seen, so
/// the front never loses ground between generations.
Nsga2Result nsga2_optimize(const Objective& objective, const ConfigSpace& space,
                           const Nsga2Config& cfg = {});

/// Mean distance from each reference point to its nearest approximation point.
double igd(const std::vector<Vector>& reference_front, const std::vector<Vector>& approximation);

}  // namespace rescue::moea

#endif  // RESCUE_MOEA_HPP
