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
  \file benchmarks.hpp

  Closed-form multi-fidelity multi-objective test problems.

  Fidelity degradation for Branin-Currin and Park follows

      f(x, s) = f(x, 1) + (1 - s) * b(x)

  with the bias fields

      Branin:  b(x) = 20 sin(pi x1) cos(pi x2)
      Currin:  b(x) = 2 (x1 - x2)
      Park1:   b(x) = 2 (x1 + x2 - x3 x4)
      Park2:   b(x) = sin(pi x1 x2) + x3

  so the target fidelity is exact and every lower fidelity is biased.

  The adversarial problem uses a ZDT1-style base pair on [0,1]^2,

      f1 = x1,   f2 = g (1 - sqrt(x1 / g)),   g = 1 + x2,

  and adds delta_scale * b(x) below the target fidelity with

      b(x) = (cos(2 pi x1) cos(2 pi x2), cos(4 pi x1) cos(2 pi x2)).

  Both components of b have zero mean and are orthogonal to affine functions
  of x under the uniform distribution.
*/

#ifndef RESCUE_BENCHMARKS_HPP
#define RESCUE_BENCHMARKS_HPP

#include <memory>
#include <string>
#include <vector>

#include "rescue/core.hpp"
#include "rescue/pareto.hpp"

namespace rescue::benchmarks {

// --------------------------------------------------------------------------
// Healthcare

struct HealthcareOutputs {
  double statin = 0.0;
  double psa = 0.0;
  double cancer = 0.0;
};

inline constexpr double kHealthcareAge = 65.0;

HealthcareOutputs healthcare_eval(double bmi, double aspirin, double s);

/// Minimize (Statin, PSA) over BMI in [20,30], Aspirin in [0,1], continuous
/// fidelity S in [0,1], subject to Cancer <= threshold.
class HealthcareProblem : public Problem {
 public:
  /// Threshold preset from the benchmark appendix.
  static constexpr double kCancerThreshold = 0.35;
  /// Stricter preset quoted in the experiment summary.
  static constexpr double kCancerThresholdStrict = 0.30;

  explicit HealthcareProblem(double cancer_threshold = kCancerThreshold);
  std::string name() const override { return "healthcare"; }
  Evaluation evaluate_raw(const Vector& x, double s) const override;
};

// --------------------------------------------------------------------------
// Robot navigation collision-risk score

struct CollisionRiskInputs {
  double max_vel_x = 0.3;              ///< [0.1, 0.5] m/s
  double decel_lim_x = -2.0;           ///< [-4, -1] m/s^2
  double local_inflation_radius = 0.45;  ///< [0.3, 0.6] m
  double sim_time = 2.0;               ///< [1, 3] s
  double local_resolution = 0.07;      ///< [0.04, 0.1] m
  double goal_align_scale = 35.0;      ///< [10, 60]
  double goal_dist_scale = 35.0;       ///< [10, 60]
  double base_obstacle_scale = 0.05;   ///< [0.01, 0.1]
  double vx_samples = 25.0;            ///< [10, 40]
  double vtheta_samples = 25.0;        ///< [10, 40]
};

struct CollisionRiskTerms {
  double speed = 0.0;
  double safety = 0.0;
  double reaction = 0.0;
  double perception = 0.0;
  double goal = 0.0;
  double sampling = 0.0;
  double score = 0.0;
};

bool in_bounds(const CollisionRiskInputs& in);
CollisionRiskTerms collision_risk_terms(const CollisionRiskInputs& in);
/// Weighted risk score in [0, 10].
double collision_risk_score(const CollisionRiskInputs& in);
/// Parameter bounds in struct field order.
std::vector<Interval> collision_risk_bounds();
CollisionRiskInputs collision_risk_inputs_from(const Vector& v);

// --------------------------------------------------------------------------
// Synthetic functions

double branin_unit(double x1, double x2);
double currin(double x1, double x2);
double park1(const Vector& x);
double park2(const Vector& x);

Vector branin_currin_eval(const Vector& x, double s);
Vector park_eval(const Vector& x, double s);

class BraninCurrinProblem : public Problem {
 public:
  BraninCurrinProblem();
  std::string name() const override { return "branin-currin"; }
  Evaluation evaluate_raw(const Vector& x, double s) const override;
};

class ParkProblem : public Problem {
 public:
  ParkProblem();
  std::string name() const override { return "park"; }
  Evaluation evaluate_raw(const Vector& x, double s) const override;
};

// --------------------------------------------------------------------------
// Adversarial bias

Vector adversarial_base(const Vector& x);
Vector adversarial_bias_field(const Vector& x);
/// Largest Euclidean norm of the bias field over [0,1]^2.
double adversarial_bias_field_sup();

class AdversarialBiasProblem : public Problem {
 public:
  explicit AdversarialBiasProblem(double delta_scale = 0.0);
  std::string name() const override { return "adversarial"; }
  Evaluation evaluate_raw(const Vector& x, double s) const override;
  double delta_scale() const { return delta_scale_; }
  /// Observational logs come from the target system only.
  double sample_observational_fidelity(std::mt19937_64& rng) const override;

 private:
  double delta_scale_;
};

Vector adversarial_eval(const AdversarialBiasProblem& problem, const Vector& x, double s);

// --------------------------------------------------------------------------
// Registry and oracle

struct ProblemOptions {
  double delta_scale = 0.0;
  double cancer_threshold = HealthcareProblem::kCancerThreshold;
  double noise_std = 0.0;
};

std::unique_ptr<Problem> make_problem(const std::string& name, const ProblemOptions& options = {});
std::vector<std::string> problem_names();

/// Configurations of a full-factorial grid with `points_per_dim[i]` levels in
/// dimension i (endpoints included).
std::vector<Vector> grid_configs(const ConfigSpace& space, const std::vector<int>& points_per_dim);
std::vector<int> uniform_grid(const ConfigSpace& space, int n);

struct OracleFront {
  pareto::ParetoFront front;
  double hv_star = 0.0;
  int grid_points = 0;
  int feasible_points = 0;
};

/// Reference point from a target-fidelity grid: componentwise worst feasible
/// objective value plus 10% of the observed range.
Vector grid_reference_point(const Problem& problem, const std::vector<int>& points_per_dim);

/// Feasible target-fidelity Pareto front and HV* over a dense grid (d <= 4).
OracleFront oracle_pareto(const Problem& problem, const std::vector<int>& points_per_dim,
                          const Vector& reference);

/// Default oracle grid sizes used by the runner and theory harness.
std::vector<int> default_oracle_grid(const Problem& problem);

}  // namespace rescue::benchmarks

#endif  // RESCUE_BENCHMARKS_HPP
