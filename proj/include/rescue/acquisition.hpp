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
  \file acquisition.hpp

  Cost-normalized causal hypervolume knowledge gradient.

  For a candidate (x, s) with fantasies y^1..y^N drawn from the posterior
  predictive,

      A(x, s) = ( mean_i HV[D + (x, s, y^i)] - HV[D] ) / c(x, s),
      HV[D]   = HV_GP[D] + w * HV_CI,

  where HV_GP is the hypervolume of the Pareto-filtered posterior means at
  the target fidelity over a shared inner candidate set, restricted to
  candidates whose constraints hold with probability above the threshold,
  and HV_CI the hypervolume of the interventional estimates over the same
  set. HV_CI does not depend on the fantasies, so it cancels in A; it is
  still reported by combined_hv().
*/

#ifndef RESCUE_ACQUISITION_HPP
#define RESCUE_ACQUISITION_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rescue/core.hpp"
#include "rescue/sampling.hpp"
#include "rescue/surrogate.hpp"

namespace rescue::acquisition {

struct AcquisitionConfig {
  double w = 0.5;
  int n_fantasies = 8;
  int n_inner_candidates = 256;
  int n_outer_candidates = 64;
  /// Fidelity levels tried for continuous fidelity spaces.
  int continuous_fidelity_levels = 8;
  double feasibility_threshold = 0.5;
  sampling::Design design = sampling::Design::kSobol;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// What the acquisition needs to know about the current state.
struct Context {
  const surrogate::MfcgpPosterior* objectives = nullptr;
  /// Constraint-metric block; may be null when there are no constraints.
  const surrogate::MfcgpPosterior* constraints = nullptr;
  std::vector<Constraint> constraint_specs;
  Vector reference;
  CostModel cost;
  FidelitySpace fidelities;
};

struct Candidate {
  Vector x;
  double s = kTargetFidelity;
  double value = 0.0;
  double cost = 0.0;
  std::vector<double> feasibility;  ///< per constraint, at the target fidelity
  bool feasible = true;
  bool evaluated = false;
};

struct AcquisitionResult {
  Vector x;
  double s = kTargetFidelity;
  double value = 0.0;
  /// HV[D] on the inner set, the baseline subtracted in A.
  double baseline = 0.0;
  /// No outer candidate was feasible; the choice maximizes feasibility.
  bool fallback = false;
  std::vector<Candidate> table;
};

/// P(constraint q holds) at (x, s) under the constraint posterior. Empty
/// when there are no constraints.
std::vector<double> feasibility_probability(const Context& ctx, const Vector& x, double s = kTargetFidelity);
bool is_feasible(const std::vector<double>& probabilities, double threshold);

/// HV of the Pareto-filtered points; empty input gives 0.
double front_hv(const std::vector<Vector>& points, const Vector& reference);

/// HV_GP + w * HV_CI over the given configurations, all treated as feasible.
double combined_hv(const Context& ctx, const std::vector<Vector>& candidates_x, double w);

/// HV[D] over the feasible subset of candidates_x (all of them, with a
/// warning, when none is feasible).
double current_value(const Context& ctx, const std::vector<Vector>& candidates_x, double w,
                     double threshold = 0.5);

/// Precomputed inner set shared across outer candidates.
class InnerSet {
 public:
  InnerSet(const Context& ctx, std::vector<Vector> candidates_x, const AcquisitionConfig& cfg);

  const std::vector<Vector>& candidates() const { return x_; }
  /// Indices of candidates that count as feasible.
  const std::vector<int>& active() const { return active_; }
  double hv_ci() const { return hv_ci_; }
  double baseline() const { return baseline_; }

  /// Monte Carlo estimate of A(x, s) with fantasies seeded by `seed`.
  double value(const Vector& x, double s, std::uint64_t seed) const;

 private:
  const Context* ctx_;
  AcquisitionConfig cfg_;
  std::vector<Vector> x_;
  std::vector<int> active_;
  surrogate::PreparedQueries prepared_;
  double hv_ci_ = 0.0;
  double baseline_ = 0.0;
};

/// A(x, s) over a freshly built inner set.
double chvkg(const Context& ctx, const Vector& x, double s, const AcquisitionConfig& cfg);

/// Outer candidates: n_outer configurations times the candidate fidelities.
std::vector<std::pair<Vector, double>> outer_candidates(const Context& ctx, const AcquisitionConfig& cfg);

/// Maximizes A over the given outer candidates. Ties go to the lower cost,
/// then the lexicographically smaller x.
AcquisitionResult select_from(const Context& ctx, const std::vector<std::pair<Vector, double>>& outer,
                              const std::vector<Vector>& inner, const AcquisitionConfig& cfg);
AcquisitionResult select_next(const Context& ctx, const AcquisitionConfig& cfg);

/// Monte Carlo one-step expected hypervolume improvement of observing x at
/// the target fidelity over the observed front, divided by the cost.
double ehvi(const Context& ctx, const std::vector<Vector>& observed_front, const Vector& x,
            const AcquisitionConfig& cfg);

/// EHVI maximized over n_outer configurations at the target fidelity, with
/// the same feasibility filter, tie-break and fallback as select_next().
AcquisitionResult select_next_ehvi(const Context& ctx, const std::vector<Vector>& observed_front,
                                   const AcquisitionConfig& cfg);

/// One row per candidate: x..., s, value, cost, feasible, p_0...
void write_table_csv(const AcquisitionResult& result, std::ostream& out);

}  // namespace rescue::acquisition

#endif  // RESCUE_ACQUISITION_HPP
