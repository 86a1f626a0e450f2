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

#include "rescue/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rescue/errors.hpp"

namespace rescue::benchmarks {
namespace {

constexpr double kPi = std::numbers::pi;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
double clip01(double v) { return std::max(0.0, std::min(v, 1.0)); }

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

// --------------------------------------------------------------------------

HealthcareOutputs healthcare_eval(double bmi, double aspirin, double s) {
  const double age = kHealthcareAge;
  HealthcareOutputs out;
  out.statin = sigmoid(s * (-13.0 + 0.1 * age + 0.2 * bmi));
  out.cancer = sigmoid(s * (2.2 - 0.05 * age + 0.01 * bmi - 0.04 * out.statin + 0.2 * aspirin));
  out.psa = (s + 6.8) * (0.04 * age - 0.15 * bmi + 0.6 * out.statin + 0.55 * aspirin + out.cancer);
  return out;
}

HealthcareProblem::HealthcareProblem(double cancer_threshold) {
  config_space_ = ConfigSpace({{20.0, 30.0}, {0.0, 1.0}}, {"BMI", "Aspirin"});
  fidelity_space_ = FidelitySpace::continuous(0.0);
  objective_names_ = {"Statin", "PSA"};
  constraints_ = {Constraint{"Cancer", cancer_threshold, ConstraintDirection::kAtMost}};
  maximize_ = {false, false};
}

Evaluation HealthcareProblem::evaluate_raw(const Vector& x, double s) const {
  const auto o = healthcare_eval(x[0], x[1], s);
  Evaluation e;
  e.y = vec2(o.statin, o.psa);
  e.h = Vector::Constant(1, o.cancer);
  return e;
}

// --------------------------------------------------------------------------

std::vector<Interval> collision_risk_bounds() {
  return {{0.1, 0.5}, {-4.0, -1.0}, {0.3, 0.6}, {1.0, 3.0}, {0.04, 0.1},
          {10.0, 60.0}, {10.0, 60.0}, {0.01, 0.1}, {10.0, 40.0}, {10.0, 40.0}};
}

CollisionRiskInputs collision_risk_inputs_from(const Vector& v) {
  if (v.size() != 10) throw DomainError("collision_risk_inputs_from: expected 10 values");
  return CollisionRiskInputs{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
}

bool in_bounds(const CollisionRiskInputs& in) {
  const double vals[] = {in.max_vel_x,        in.decel_lim_x,      in.local_inflation_radius, in.sim_time,
                         in.local_resolution, in.goal_align_scale, in.goal_dist_scale,        in.base_obstacle_scale,
                         in.vx_samples,       in.vtheta_samples};
  const auto bounds = collision_risk_bounds();
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!(vals[i] >= bounds[i].lo && vals[i] <= bounds[i].hi)) return false;
  }
  return true;
}

CollisionRiskTerms collision_risk_terms(const CollisionRiskInputs& in) {
  CollisionRiskTerms t;
  const double speed_decel_ratio = in.max_vel_x / (std::abs(in.decel_lim_x) + 0.01);
  t.speed = clip01(speed_decel_ratio / 2.0);
  const double safety_margin = in.local_inflation_radius / (in.max_vel_x + 0.01);
  t.safety = 1.0 / (1.0 + safety_margin);
  const double reaction_margin = in.local_inflation_radius / (in.max_vel_x * in.sim_time + 0.01);
  t.reaction = 1.0 / (1.0 + reaction_margin);
  const double perception_risk = in.local_resolution / (in.local_inflation_radius + 0.01);
  t.perception = clip01(perception_risk / 0.5);
  const double goal_vs_obstacle = (in.goal_align_scale + in.goal_dist_scale) / (in.base_obstacle_scale + 0.01);
  t.goal = clip01(goal_vs_obstacle / 3.0);
  const double sampling_density = in.vx_samples * in.vtheta_samples;
  t.sampling = 1.0 / (1.0 + sampling_density / 200.0);
  t.score = 10.0 * (0.2 * t.speed + 0.3 * t.safety + 0.2 * t.reaction + 0.1 * t.perception + 0.15 * t.goal +
                    0.05 * t.sampling);
  return t;
}

double collision_risk_score(const CollisionRiskInputs& in) { return collision_risk_terms(in).score; }

// --------------------------------------------------------------------------

double branin_unit(double x1, double x2) {
  const double a = 15.0 * x1 - 5.0;
  const double b = 15.0 * x2;
  const double q = b - 5.1 / (4.0 * kPi * kPi) * a * a + 5.0 / kPi * a - 6.0;
  return q * q + 10.0 * (1.0 - 1.0 / (8.0 * kPi)) * std::cos(a) + 10.0;
}

double currin(double x1, double x2) {
  const double factor = x2 > 0.0 ? 1.0 - std::exp(-1.0 / (2.0 * x2)) : 1.0;
  const double num = 2300.0 * x1 * x1 * x1 + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0;
  const double den = 100.0 * x1 * x1 * x1 + 500.0 * x1 * x1 + 4.0 * x1 + 20.0;
  return factor * num / den;
}

double park1(const Vector& x) {
  // x1/2 (sqrt(1 + a/x1^2) - 1) rewritten to stay finite at x1 = 0.
  const double a = (x[1] + x[2] * x[2]) * x[3];
  return 0.5 * (std::sqrt(x[0] * x[0] + a) - x[0]) + (x[0] + 3.0 * x[3]) * std::exp(1.0 + std::sin(x[2]));
}

double park2(const Vector& x) {
  return 2.0 / 3.0 * std::exp(x[0] + x[1]) - x[3] * std::sin(x[2]) + x[2];
}

Vector branin_currin_eval(const Vector& x, double s) {
  const double w = 1.0 - s;
  const double b1 = 20.0 * std::sin(kPi * x[0]) * std::cos(kPi * x[1]);
  const double b2 = 2.0 * (x[0] - x[1]);
  return vec2(branin_unit(x[0], x[1]) + w * b1, currin(x[0], x[1]) + w * b2);
}

Vector park_eval(const Vector& x, double s) {
  const double w = 1.0 - s;
  const double b1 = 2.0 * (x[0] + x[1] - x[2] * x[3]);
  const double b2 = std::sin(kPi * x[0] * x[1]) + x[2];
  return vec2(park1(x) + w * b1, park2(x) + w * b2);
}

BraninCurrinProblem::BraninCurrinProblem() {
  config_space_ = ConfigSpace({{0.0, 1.0}, {0.0, 1.0}}, {"X1", "X2"});
  fidelity_space_ = FidelitySpace::continuous(0.0);
  objective_names_ = {"Branin", "Currin"};
  maximize_ = {false, false};
}

Evaluation BraninCurrinProblem::evaluate_raw(const Vector& x, double s) const {
  return Evaluation{branin_currin_eval(x, s), Vector(0), Vector(0)};
}

ParkProblem::ParkProblem() {
  config_space_ = ConfigSpace({{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}, {"X1", "X2", "X3", "X4"});
  fidelity_space_ = FidelitySpace::continuous(0.0);
  objective_names_ = {"Park1", "Park2"};
  maximize_ = {false, false};
}

Evaluation ParkProblem::evaluate_raw(const Vector& x, double s) const {
  return Evaluation{park_eval(x, s), Vector(0), Vector(0)};
}

// --------------------------------------------------------------------------

Vector adversarial_base(const Vector& x) {
  const double g = 1.0 + x[1];
  return vec2(x[0], g * (1.0 - std::sqrt(x[0] / g)));
}

Vector adversarial_bias_field(const Vector& x) {
  const double c2 = std::cos(2.0 * kPi * x[1]);
  return vec2(std::cos(2.0 * kPi * x[0]) * c2, std::cos(4.0 * kPi * x[0]) * c2);
}

double adversarial_bias_field_sup() { return std::sqrt(2.0); }

AdversarialBiasProblem::AdversarialBiasProblem(double delta_scale) : delta_scale_(delta_scale) {
  if (!(delta_scale >= 0.0)) throw DomainError("AdversarialBiasProblem: delta_scale must be >= 0");
  config_space_ = ConfigSpace({{0.0, 1.0}, {0.0, 1.0}}, {"X1", "X2"});
  fidelity_space_ = FidelitySpace::discrete({0.2, 0.5, 1.0});
  objective_names_ = {"F1", "F2"};
  maximize_ = {false, false};
}

Evaluation AdversarialBiasProblem::evaluate_raw(const Vector& x, double s) const {
  return Evaluation{adversarial_eval(*this, x, s), Vector(0), Vector(0)};
}

double AdversarialBiasProblem::sample_observational_fidelity(std::mt19937_64&) const { return kTargetFidelity; }

Vector adversarial_eval(const AdversarialBiasProblem& problem, const Vector& x, double s) {
  Vector y = adversarial_base(x);
  if (s < kTargetFidelity) y += problem.delta_scale() * adversarial_bias_field(x);
  return y;
}

// --------------------------------------------------------------------------

std::vector<std::string> problem_names() { return {"healthcare", "branin-currin", "park", "adversarial"}; }

std::unique_ptr<Problem> make_problem(const std::string& name, const ProblemOptions& options) {
  std::unique_ptr<Problem> p;
  if (name == "healthcare") {
    p = std::make_unique<HealthcareProblem>(options.cancer_threshold);
  } else if (name == "branin-currin") {
    p = std::make_unique<BraninCurrinProblem>();
  } else if (name == "park") {
    p = std::make_unique<ParkProblem>();
  } else if (name == "adversarial") {
    p = std::make_unique<AdversarialBiasProblem>(options.delta_scale);
  } else {
    throw ConfigError("unknown problem '" + name + "'");
  }
  p->set_noise_std(options.noise_std);
  p->set_reference_point(grid_reference_point(*p, default_oracle_grid(*p)));
  return p;
}

std::vector<Vector> grid_configs(const ConfigSpace& space, const std::vector<int>& points_per_dim) {
  const int d = space.dims();
  if (static_cast<int>(points_per_dim.size()) != d) throw DomainError("grid_configs: one size per dimension required");
  long total = 1;
  for (int n : points_per_dim) {
    if (n < 2) throw DomainError("grid_configs: at least 2 points per dimension");
    total *= n;
  }
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (long k = 0; k < total; ++k) {
    Vector u(d);
    for (int j = 0; j < d; ++j) {
      u[j] = static_cast<double>(idx[static_cast<std::size_t>(j)]) / (points_per_dim[static_cast<std::size_t>(j)] - 1);
    }
    out.push_back(space.from_unit(u));
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < points_per_dim[static_cast<std::size_t>(j)]) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return out;
}

std::vector<int> uniform_grid(const ConfigSpace& space, int n) {
  return std::vector<int>(static_cast<std::size_t>(space.dims()), n);
}

std::vector<int> default_oracle_grid(const Problem& problem) {
  const std::string n = problem.name();
  if (n == "healthcare") return {200, 50};
  if (n == "park") return uniform_grid(problem.config_space(), 11);
  const int d = problem.config_space().dims();
  const int per = std::max(2, static_cast<int>(std::floor(std::pow(10000.0, 1.0 / d))) + (d == 2 ? 1 : 0));
  return uniform_grid(problem.config_space(), per);
}

namespace {

struct GridValues {
  std::vector<Vector> feasible;
  int total = 0;
};

GridValues target_grid_values(const Problem& problem, const std::vector<int>& points_per_dim) {
  if (problem.config_space().dims() > 4) throw DomainError("oracle grid: d > 4 unsupported");
  GridValues gv;
  for (const auto& x : grid_configs(problem.config_space(), points_per_dim)) {
    ++gv.total;
    const Evaluation e = problem.evaluate(x, kTargetFidelity);
    if (problem.feasible(e.h)) gv.feasible.push_back(e.y);
  }
  return gv;
}

}  // namespace

Vector grid_reference_point(const Problem& problem, const std::vector<int>& points_per_dim) {
  const auto gv = target_grid_values(problem, points_per_dim);
  if (gv.feasible.empty()) throw StateError("grid_reference_point: no feasible grid point");
  Vector worst = gv.feasible.front();
  Vector best = gv.feasible.front();
  for (const auto& y : gv.feasible) {
    worst = worst.cwiseMax(y);
    best = best.cwiseMin(y);
  }
  Vector range = worst - best;
  for (int m = 0; m < range.size(); ++m) {
    if (range[m] <= 1e-12) range[m] = std::max(1.0, std::abs(worst[m]));
  }
  return worst + 0.1 * range;
}

OracleFront oracle_pareto(const Problem& problem, const std::vector<int>& points_per_dim, const Vector& reference) {
  const auto gv = target_grid_values(problem, points_per_dim);
  OracleFront out;
  out.grid_points = gv.total;
  out.feasible_points = static_cast<int>(gv.feasible.size());
  out.front.points = pareto::pareto_filter(gv.feasible);
  out.front.reference = reference;
  out.hv_star = pareto::hypervolume(out.front.points, reference);
  return out;
}

}  // namespace rescue::benchmarks
