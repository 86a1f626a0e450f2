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
  \file surrogate.hpp

  Multi-output multi-fidelity Gaussian process with a causal prior mean.

  Outputs of N training points are stacked point-major (index i*M + m). The
  covariance between output m at (x, s) and output m' at (x', s') is

      ( k_x(x, x') k_s(s, s') + c * sd_m(x, s) sd_m'(x', s') ) * B[m, m']

  with RBF kernels k_x (per-dimension lengthscales on inputs scaled to the
  unit cube) and k_s, causal standard deviations sd, a non-negative scale c,
  and B = L L^T + diag(exp(a)).

  When output standardization is on, targets, prior means and prior stds
  are mapped by the same per-output affine transform before fitting; every
  public query returns original units.
*/

#ifndef RESCUE_SURROGATE_HPP
#define RESCUE_SURROGATE_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <nlohmann/json.hpp>

#include "rescue/causal.hpp"
#include "rescue/core.hpp"

namespace rescue::surrogate {

struct KernelSpec {
  Vector input_lengthscales;
  double fidelity_lengthscale = 0.5;
  Matrix coreg_factor;   ///< L, M x rank
  Vector coreg_log_diag;  ///< a, length M
  double prior_scale = 1.0;
  double noise_variance = 1e-4;
  double jitter = 1e-6;

  int outputs() const { return static_cast<int>(coreg_log_diag.size()); }
  Matrix coregionalization() const;

  /// Lengthscales 0.5, B = I, rank(L) = min(M, 2) with L = 0.
  static KernelSpec defaults(int dims, int outputs);

  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);
};

/// Hyperparameter search box.
struct KernelBounds {
  double lengthscale_lo = 1e-2, lengthscale_hi = 1e2;
  double noise_lo = 1e-8, noise_hi = 1.0;
  double prior_scale_lo = 0.0, prior_scale_hi = 10.0;
  double log_diag_lo = -8.0, log_diag_hi = 4.0;
  double factor_lo = -3.0, factor_hi = 3.0;
};

double rbf(const Vector& a, const Vector& b, const Vector& lengthscales);

/// Kernel between output m1 at (u1, s1) and output m2 at (u2, s2); u are unit-cube
/// inputs and sd the causal standard deviations at each point.
double kernel_eval(const KernelSpec& spec, const Vector& u1, double s1, const Vector& sd1, int m1, const Vector& u2,
                   double s2, const Vector& sd2, int m2);

/// Causal prior for one output block (objectives or constraints) with a
/// quantized (1e-9) memo of the interventional estimates. Copies share the memo.
class CausalPrior {
 public:
  enum class Block { kObjectives, kConstraints };

  /// Zero mean and zero std for `outputs` outputs.
  explicit CausalPrior(int outputs = 0);
  CausalPrior(std::shared_ptr<const causal::CausalModel> model, Block block);

  int outputs() const { return outputs_; }
  bool agnostic() const { return model_ == nullptr || model_->is_agnostic(); }

  struct Value {
    Vector mean;
    Vector std;
  };
  Value at(const Vector& x, double s) const;
  std::size_t cache_size() const;

 private:
  struct Cache {
    std::mutex mu;
    std::map<std::vector<long long>, Value> values;
  };
  std::shared_ptr<const causal::CausalModel> model_;
  Block block_ = Block::kObjectives;
  int outputs_ = 0;
  std::shared_ptr<Cache> cache_;
};

struct FitOptions {
  bool hyperopt = false;
  bool standardize = false;
  int restarts = 8;
  int evaluations_per_restart = 50;
  std::uint64_t seed = 0;
  KernelBounds bounds;
};

struct Prediction {
  Vector mean;  ///< M
  Matrix cov;   ///< M x M, latent (noise-free)
  Vector std() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Queries prepared once for repeated fantasy evaluation.
struct PreparedQueries {
  std::vector<Vector> x;
  std::vector<Vector> u;
  std::vector<double> s;
  std::vector<Vector> prior_sd;  ///< standardized units
  Matrix v;                       ///< L^{-1} k(X, queries), NM x nM
  std::vector<Vector> mean;       ///< posterior means, original units
};

class MfcgpPosterior;

struct FantasyModel {
  std::shared_ptr<const MfcgpPosterior> posterior;
  Vector y;  ///< fantasized observation, original units
};

class MfcgpPosterior {
 public:
  /// Fits on N points (N may be 0, giving the prior). y holds one row per point.
  static MfcgpPosterior fit(const ConfigSpace& space, const std::vector<Vector>& x, const std::vector<double>& s,
                            const Matrix& y, const KernelSpec& spec, const CausalPrior& prior,
                            const FitOptions& options = {});

  int outputs() const { return spec_.outputs(); }
  int size() const { return static_cast<int>(x_.size()); }
  const KernelSpec& kernel() const { return spec_; }
  const CausalPrior& prior() const { return prior_; }
  const ConfigSpace& space() const { return space_; }
  const Vector& output_shift() const { return shift_; }
  const Vector& output_scale() const { return scale_; }
  const std::vector<Vector>& train_x() const { return x_; }
  const std::vector<double>& train_s() const { return s_; }
  const Matrix& train_y() const { return y_; }
  /// Diagonal jitter actually used by the Cholesky factor.
  double jitter_used() const { return jitter_used_; }

  /// Prior mean and covariance, original units.
  Prediction prior_at(const Vector& x, double s) const;
  Prediction predict(const Vector& x, double s) const;
  std::vector<Prediction> predict(const std::vector<Vector>& x, const std::vector<double>& s) const;
  /// Posterior covariance block K(a, b | D), original units.
  Matrix cross_covariance(const Vector& xa, double sa, const Vector& xb, double sb) const;

  /// Log marginal likelihood of the standardized targets.
  double log_marginal_likelihood() const { return lml_; }

  /// Posterior after appending one observation, via a block Cholesky update.
  MfcgpPosterior condition_on(const Vector& x, double s, const Vector& y) const;

  /// n draws of y ~ N(mu(x,s|D), K(x,x|D) + noise I), original units.
  std::vector<Vector> draw_fantasies(const Vector& x, double s, int n, std::uint64_t seed) const;
  std::vector<FantasyModel> fantasize(const Vector& x, double s, int n, std::uint64_t seed) const;

  PreparedQueries prepare(const std::vector<Vector>& x, const std::vector<double>& s) const;
  /// Posterior means at prepared queries after conditioning on (x, s, y) for
  /// each y in ys. Result[i][q] is the M-vector at query q under fantasy i.
  std::vector<std::vector<Vector>> fantasy_means(const PreparedQueries& queries, const Vector& x, double s,
                                                 const std::vector<Vector>& ys) const;

  nlohmann::json snapshot() const;
  /// Rebuilds from a snapshot with the given prior (no hyperparameter search).
  static MfcgpPosterior restore(const nlohmann::json& j, const ConfigSpace& space, const CausalPrior& prior);

 private:
  MfcgpPosterior() = default;
  void factorize();
  Matrix cross_prior(const Vector& ua, double sa, const Vector& sda, const Vector& ub, double sb,
                     const Vector& sdb) const;
  Matrix train_cross(const Vector& u, double s, const Vector& sd) const;  ///< NM x M
  CausalPrior::Value prior_std_units(const Vector& x, double s) const;

  ConfigSpace space_;
  KernelSpec spec_;
  CausalPrior prior_;
  std::vector<Vector> x_, u_;
  std::vector<double> s_;
  Matrix y_;
  Vector shift_, scale_;
  Matrix prior_mean_std_, prior_sd_std_;  ///< N x M, standardized units
  Matrix coreg_;
  Matrix chol_;
  Vector alpha_;
  double jitter_used_ = 0.0;
  double lml_ = 0.0;
  bool standardize_ = false;
  std::uint64_t seed_ = 0;
};

/// Fits the objective block on a dataset.
MfcgpPosterior fit_objectives(const Dataset& data, const ConfigSpace& space, const KernelSpec& spec,
                              const CausalPrior& prior, const FitOptions& options = {});
/// Fits the constraint-metric block (independent of the objective block).
MfcgpPosterior fit_constraints(const Dataset& data, const ConfigSpace& space, const KernelSpec& spec,
                               const CausalPrior& prior, const FitOptions& options = {});

struct Marginal {
  double mean = 0.0;
  double std = 0.0;
};
/// Per-constraint marginal Gaussians; empty when the block has no outputs.
std::vector<Marginal> constraint_posterior(const MfcgpPosterior* constraints, const Vector& x, double s);

}  // namespace rescue::surrogate

#endif  // RESCUE_SURROGATE_HPP
