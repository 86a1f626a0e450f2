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

#ifndef RESCUE_SAMPLING_HPP
#define RESCUE_SAMPLING_HPP

#include <cstdint>
#include <vector>

#include "rescue/core.hpp"

namespace rescue::sampling {

/// Grid resolution used to invert the continuous fidelity CDF.
inline constexpr int kContinuousCdfGrid = 512;

/// Normalized inverse-cost weights of the discrete levels, p(s) ∝ 1/c(x, s).
std::vector<double> fidelity_probabilities(const CostModel& cost, const FidelitySpace& space,
                                           const Vector& x = Vector());

/// Inverse of the cost-weighted fidelity CDF. Lower-cost fidelities get more
/// mass. u must lie in [0, 1).
double fidelity_inverse_cdf(const CostModel& cost, const FidelitySpace& space, double u,
                            const Vector& x = Vector());

struct InitSamplerConfig {
  double budget = 0.0;
  std::uint64_t seed = 0;
  /// Consecutive over-budget draws tolerated before giving up.
  int max_consecutive_skips = 100;
};

/// Cost-aware initial design: uniform configurations, fidelities drawn from
/// the inverse-cost distribution, stopping once no fidelity fits in the
/// remaining budget. The returned dataset never exceeds cfg.budget.
Dataset initial_sample(const Problem& problem, const CostModel& cost, const InitSamplerConfig& cfg);

enum class Design { kSobol, kLhs };

/// n points of [0,1]^d. Sobol points are digitally shifted when `scramble`
/// is set; unscrambled Sobol starts at the origin. Sobol with d > 64 falls
/// back to LHS with a warning.
std::vector<Vector> unit_candidates(int d, int n, Design design, std::uint64_t seed, bool scramble = true);

/// unit_candidates() mapped into the bounds of `space`.
std::vector<Vector> quasi_random_candidates(const ConfigSpace& space, int n, Design design,
                                            std::uint64_t seed, bool scramble = true);

}  // namespace rescue::sampling

#endif  // RESCUE_SAMPLING_HPP
