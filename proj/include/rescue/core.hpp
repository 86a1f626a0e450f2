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
  \file core.hpp

  Shared vocabulary: configuration and fidelity spaces, observations, datasets,
  problems and cost models.

  Conventions used everywhere in the library:
    - objectives are minimized internally; a problem flagged "maximize" for an
      objective has that objective negated when it is evaluated through
      Problem::evaluate();
    - constraint metrics are kept in raw units and carry their own direction;
    - the target fidelity is always 1.0.
*/

#ifndef RESCUE_CORE_HPP
#define RESCUE_CORE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace rescue {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kTargetFidelity = 1.0;

// --------------------------------------------------------------------------
// Random seeds

/// SplitMix64 finalizer; used to derive independent stream seeds from a root seed.
std::uint64_t mix_seed(std::uint64_t value);

/// Seed for stream `stream` under `root`. Distinct streams give unrelated seeds.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

// --------------------------------------------------------------------------
// Spaces

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
};

class ConfigSpace {
 public:
  ConfigSpace() = default;
  ConfigSpace(std::vector<Interval> bounds, std::vector<std::string> names = {});

  int dims() const { return static_cast<int>(bounds_.size()); }
  const std::vector<Interval>& bounds() const { return bounds_; }
  const std::vector<std::string>& names() const { return names_; }

  bool contains(const Vector& x, double tol = 1e-12) const;
  /// Throws DomainError naming the offending component.
  void check(const Vector& x) const;

  Vector lower() const;
  Vector upper() const;
  /// Maps a point of the unit cube to the box (no bounds check).
  Vector from_unit(const Vector& u) const;

 private:
  std::vector<Interval> bounds_;
  std::vector<std::string> names_;
};

class FidelitySpace {
 public:
  enum class Kind { kDiscrete, kContinuous };

  static FidelitySpace discrete(std::vector<double> levels);
  static FidelitySpace continuous(double s_min);
  /// A single level at the target fidelity.
  static FidelitySpace target_only() { return discrete({kTargetFidelity}); }

  Kind kind() const { return kind_; }
  bool is_discrete() const { return kind_ == Kind::kDiscrete; }
  /// Sorted ascending; for continuous spaces this is {s_min, 1}.
  const std::vector<double>& levels() const { return levels_; }
  double min() const { return levels_.front(); }
  double target() const { return kTargetFidelity; }

  bool contains(double s, double tol = 1e-12) const;
  /// All discrete levels, or `n_continuous` evenly spaced levels in [s_min, 1].
  std::vector<double> candidate_levels(int n_continuous = 8) const;

 private:
  Kind kind_ = Kind::kDiscrete;
  std::vector<double> levels_{kTargetFidelity};
};

// --------------------------------------------------------------------------
// Cost

class CostModel {
 public:
  struct Exponential {
    double rate = 4.8;
  };
  struct Table {
    std::map<double, double> cost_by_fidelity;
  };
  struct Custom {
    std::function<double(const Vector&, double)> fn;
    std::string label = "custom";
  };
  using Form = std::variant<Exponential, Table, Custom>;

  CostModel() = default;
  explicit CostModel(Form form) : form_(std::move(form)) {}
  static CostModel exponential(double rate) { return CostModel(Exponential{rate}); }

  const Form& form() const { return form_; }

  /// Cost of evaluating configuration x at fidelity s. Always positive.
  double cost(const Vector& x, double s) const;
  /// Cheapest cost over the given fidelity space (x-independent forms only).
  double min_cost(const FidelitySpace& space) const;

 private:
  Form form_ = Exponential{};
};

// --------------------------------------------------------------------------
// Data

struct Observation {
  Vector x;
  double s = kTargetFidelity;
  Vector y;  ///< objectives, internal (minimization) sign
  Vector h;  ///< constraint metrics, raw
  Vector z;  ///< key performance indicators (may be empty)
  double cost = 1.0;
};

/// Ordered interventional records with a compensated running cost total.
class Dataset {
 public:
  void append(Observation obs);
  void clear();

  int size() const { return static_cast<int>(records_.size()); }
  bool empty() const { return records_.empty(); }
  const std::vector<Observation>& records() const { return records_; }
  const Observation& operator[](int i) const { return records_[static_cast<std::size_t>(i)]; }
  double cumulative_cost() const { return sum_ + compensation_; }

  /// Records at the target fidelity only.
  Dataset target_fidelity_subset(double tol = 1e-12) const;

 private:
  std::vector<Observation> records_;
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// --------------------------------------------------------------------------
// Problems

enum class ConstraintDirection { kAtLeast, kAtMost };

struct Constraint {
  std::string name;
  double threshold = 0.0;
  ConstraintDirection direction = ConstraintDirection::kAtLeast;

  bool satisfied(double h) const {
    return direction == ConstraintDirection::kAtLeast ? h >= threshold : h <= threshold;
  }
  /// Positive amount by which h misses the threshold, 0 when satisfied.
  double violation(double h) const;
};

struct Evaluation {
  Vector y;
  Vector h;
  Vector z;
};

/// A multi-fidelity multi-objective test problem.
///
/// Derived classes fill in the spaces and names in their constructor and
/// implement evaluate_raw(). Evaluation is deterministic given (x, s) and the
/// noise generator state.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  /// Noise-free outputs in the problem's own sign convention.
  virtual Evaluation evaluate_raw(const Vector& x, double s) const = 0;

  /// Outputs with optional Gaussian noise and internal minimization sign.
  Evaluation evaluate(const Vector& x, double s, std::mt19937_64* noise = nullptr) const;

  const ConfigSpace& config_space() const { return config_space_; }
  const FidelitySpace& fidelity_space() const { return fidelity_space_; }
  int num_objectives() const { return static_cast<int>(objective_names_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  const std::vector<std::string>& objective_names() const { return objective_names_; }
  const std::vector<std::string>& indicator_names() const { return indicator_names_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<bool>& maximize() const { return maximize_; }

  bool feasible(const Vector& h) const;
  double total_violation(const Vector& h) const;

  double noise_std() const { return noise_std_; }
  void set_noise_std(double sigma) { noise_std_ = sigma; }

  /// Fixed reference point (internal sign) when the problem defines one.
  const std::optional<Vector>& reference_point() const { return reference_; }
  void set_reference_point(Vector r) { reference_ = std::move(r); }

  /// Distribution of the fidelity column in observational logs. Defaults to
  /// uniform over the fidelity space.
  virtual double sample_observational_fidelity(std::mt19937_64& rng) const;

 protected:
  ConfigSpace config_space_;
  FidelitySpace fidelity_space_;
  std::vector<std::string> objective_names_;
  std::vector<std::string> indicator_names_;
  std::vector<Constraint> constraints_;
  std::vector<bool> maximize_;
  double noise_std_ = 0.0;
  std::optional<Vector> reference_;
};

// --------------------------------------------------------------------------
// Transforms

/// Affine map of x into [0,1]^d. Throws DomainError if x is out of bounds.
Vector normalize_config(const ConfigSpace& space, const Vector& x);
Vector denormalize_config(const ConfigSpace& space, const Vector& u);

struct OutputStandardization {
  Vector means;
  Vector stds;
  Dataset transformed;
};

/// Per-objective zero mean / unit (population) variance; stds floored at 1e-9.
OutputStandardization standardize_outputs(const Dataset& ds);

}  // namespace rescue

#endif  // RESCUE_CORE_HPP
