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

#include "rescue/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "rescue/errors.hpp"
#include "rescue/log.hpp"

namespace rescue::surrogate {

// --------------------------------------------------------------------------
// Kernel

Matrix KernelSpec::coregionalization() const {
  Matrix b = coreg_factor * coreg_factor.transpose();
  b.diagonal() += coreg_log_diag.array().exp().matrix();
  return b;
}

KernelSpec KernelSpec::defaults(int dims, int outputs) {
  KernelSpec k;
  k.input_lengthscales = Vector::Constant(dims, 0.5);
  k.coreg_factor = Matrix::Zero(outputs, std::min(outputs, 2));
  k.coreg_log_diag = Vector::Zero(outputs);
  return k;
}

nlohmann::json KernelSpec::to_json() const {
  nlohmann::json j;
  j["input_lengthscales"] = std::vector<double>(input_lengthscales.data(), input_lengthscales.data() + input_lengthscales.size());
  j["fidelity_lengthscale"] = fidelity_lengthscale;
  std::vector<std::vector<double>> l;
  for (Eigen::Index r = 0; r < coreg_factor.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < coreg_factor.cols(); ++c) row.push_back(coreg_factor(r, c));
    l.push_back(row);
  }
  j["coreg_factor"] = l;
  j["coreg_log_diag"] = std::vector<double>(coreg_log_diag.data(), coreg_log_diag.data() + coreg_log_diag.size());
  j["prior_scale"] = prior_scale;
  j["noise_variance"] = noise_variance;
  j["jitter"] = jitter;
  return j;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  KernelSpec k;
  const auto ls = j.at("input_lengthscales").get<std::vector<double>>();
  k.input_lengthscales = Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  k.fidelity_lengthscale = j.at("fidelity_lengthscale").get<double>();
  const auto l = j.at("coreg_factor").get<std::vector<std::vector<double>>>();
  const auto a = j.at("coreg_log_diag").get<std::vector<double>>();
  const Eigen::Index cols = l.empty() ? 0 : static_cast<Eigen::Index>(l.front().size());
  k.coreg_factor = Matrix(static_cast<Eigen::Index>(l.size()), cols);
  for (std::size_t r = 0; r < l.size(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) k.coreg_factor(static_cast<Eigen::Index>(r), c) = l[r][static_cast<std::size_t>(c)];
  }
  k.coreg_log_diag = Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
  k.prior_scale = j.at("prior_scale").get<double>();
  k.noise_variance = j.at("noise_variance").get<double>();
  k.jitter = j.value("jitter", 1e-6);
  return k;
}

double rbf(const Vector& a, const Vector& b, const Vector& lengthscales) {
  return std::exp(-0.5 * ((a - b).array() / lengthscales.array()).square().sum());
}

double kernel_eval(const KernelSpec& spec, const Vector& u1, double s1, const Vector& sd1, int m1, const Vector& u2,
                   double s2, const Vector& sd2, int m2) {
  const double ds = (s1 - s2) / spec.fidelity_lengthscale;
  const double stationary = rbf(u1, u2, spec.input_lengthscales) * std::exp(-0.5 * ds * ds);
  return (stationary + spec.prior_scale * sd1[m1] * sd2[m2]) * spec.coregionalization()(m1, m2);
}

// --------------------------------------------------------------------------
// Causal prior

CausalPrior::CausalPrior(int outputs) : outputs_(outputs), cache_(std::make_shared<Cache>()) {}

CausalPrior::CausalPrior(std::shared_ptr<const causal::CausalModel> model, Block block)
    : model_(std::move(model)), block_(block), cache_(std::make_shared<Cache>()) {
  if (!model_) throw DomainError("CausalPrior: null causal model");
  outputs_ = block_ == Block::kObjectives ? model_->num_objectives() : model_->num_constraints();
}

CausalPrior::Value CausalPrior::at(const Vector& x, double s) const {
  if (agnostic()) return Value{Vector::Zero(outputs_), Vector::Zero(outputs_)};
  std::vector<long long> key;
  key.reserve(static_cast<std::size_t>(x.size()) + 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) key.push_back(std::llround(x[i] * 1e9));
  key.push_back(std::llround(s * 1e9));
  {
    std::lock_guard<std::mutex> lock(cache_->mu);
    const auto it = cache_->values.find(key);
    if (it != cache_->values.end()) return it->second;
  }
  const auto e = block_ == Block::kObjectives ? model_->objectives(x, s) : model_->constraints(x, s);
  Value v{e.mean, e.std};
  std::lock_guard<std::mutex> lock(cache_->mu);
  cache_->values.emplace(std::move(key), v);
  return v;
}

std::size_t CausalPrior::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  return cache_->values.size();
}

// --------------------------------------------------------------------------
// Posterior

namespace {

constexpr double kMaxJitter = 1e-2;

struct Layout {
  int d = 0;
  int m = 0;
  int rank = 0;
  bool use_prior_scale = false;
  int size() const { return d + 2 + (use_prior_scale ? 1 : 0) + m + m * rank; }
};

std::vector<double> pack(const KernelSpec& k, const Layout& lay) {
  std::vector<double> t;
  for (int i = 0; i < lay.d; ++i) t.push_back(std::log(k.input_lengthscales[i]));
  t.push_back(std::log(k.fidelity_lengthscale));
  t.push_back(std::log(k.noise_variance));
  if (lay.use_prior_scale) t.push_back(k.prior_scale);
  for (int i = 0; i < lay.m; ++i) t.push_back(k.coreg_log_diag[i]);
  for (int r = 0; r < lay.m; ++r) {
    for (int c = 0; c < lay.rank; ++c) t.push_back(k.coreg_factor(r, c));
  }
  return t;
}

KernelSpec unpack(const std::vector<double>& t, const KernelSpec& base, const Layout& lay) {
  KernelSpec k = base;
  std::size_t p = 0;
  for (int i = 0; i < lay.d; ++i) k.input_lengthscales[i] = std::exp(t[p++]);
  k.fidelity_lengthscale = std::exp(t[p++]);
  k.noise_variance = std::exp(t[p++]);
  if (lay.use_prior_scale) k.prior_scale = t[p++];
  for (int i = 0; i < lay.m; ++i) k.coreg_log_diag[i] = t[p++];
  for (int r = 0; r < lay.m; ++r) {
    for (int c = 0; c < lay.rank; ++c) k.coreg_factor(r, c) = t[p++];
  }
  return k;
}

// Search box and the narrower box random restarts start from.
void parameter_boxes(const KernelBounds& b, const Layout& lay, std::vector<double>& lo, std::vector<double>& hi,
                     std::vector<double>& init_lo, std::vector<double>& init_hi, std::vector<double>& step) {
  auto add = [&](double l, double h, double il, double ih, double st) {
    lo.push_back(l);
    hi.push_back(h);
    init_lo.push_back(il);
    init_hi.push_back(ih);
    step.push_back(st);
  };
  const double lls = std::log(b.lengthscale_lo), hls = std::log(b.lengthscale_hi);
  for (int i = 0; i <= lay.d; ++i) add(lls, hls, std::log(0.05), std::log(2.0), 0.5);
  add(std::log(b.noise_lo), std::log(b.noise_hi), std::log(1e-6), std::log(1e-2), 1.0);
  if (lay.use_prior_scale) add(b.prior_scale_lo, b.prior_scale_hi, 0.0, 2.0, 0.5);
  for (int i = 0; i < lay.m; ++i) add(b.log_diag_lo, b.log_diag_hi, -1.0, 1.0, 0.5);
  for (int i = 0; i < lay.m * lay.rank; ++i) add(b.factor_lo, b.factor_hi, -0.5, 0.5, 0.3);
}

Matrix lower_solve(const Matrix& chol, const Matrix& rhs) {
  if (chol.rows() == 0) return Matrix(0, rhs.cols());
  return chol.triangularView<Eigen::Lower>().solve(rhs);
}

}  // namespace

CausalPrior::Value MfcgpPosterior::prior_std_units(const Vector& x, double s) const {
  auto v = prior_.at(x, s);
  v.mean = ((v.mean - shift_).array() / scale_.array()).matrix();
  v.std = (v.std.array() / scale_.array()).matrix();
  return v;
}

Matrix MfcgpPosterior::cross_prior(const Vector& ua, double sa, const Vector& sda, const Vector& ub, double sb,
                                   const Vector& sdb) const {
  const double ds = (sa - sb) / spec_.fidelity_lengthscale;
  const double stationary = rbf(ua, ub, spec_.input_lengthscales) * std::exp(-0.5 * ds * ds);
  const Matrix outer = spec_.prior_scale * sda * sdb.transpose();
  return ((outer.array() + stationary) * coreg_.array()).matrix();
}

Matrix MfcgpPosterior::train_cross(const Vector& u, double s, const Vector& sd) const {
  const int m = outputs();
  Matrix k(size() * m, m);
  for (int i = 0; i < size(); ++i) {
    k.middleRows(i * m, m) = cross_prior(u_[static_cast<std::size_t>(i)], s_[static_cast<std::size_t>(i)],
                                         prior_sd_std_.row(i).transpose(), u, s, sd);
  }
  return k;
}

void MfcgpPosterior::factorize() {
  coreg_ = spec_.coregionalization();
  const int m = outputs();
  const int n = size();
  const int nm = n * m;
  Matrix gram(nm, nm);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Matrix blk = cross_prior(u_[static_cast<std::size_t>(i)], s_[static_cast<std::size_t>(i)],
                                     prior_sd_std_.row(i).transpose(), u_[static_cast<std::size_t>(j)],
                                     s_[static_cast<std::size_t>(j)], prior_sd_std_.row(j).transpose());
      gram.block(i * m, j * m, m, m) = blk;
      gram.block(j * m, i * m, m, m) = blk.transpose();
    }
  }
  double jitter = spec_.jitter;
  while (true) {
    Matrix k = gram;
    k.diagonal().array() += spec_.noise_variance + jitter;
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() == Eigen::Success && (nm == 0 || llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0)) {
      chol_ = llt.matrixL();
      jitter_used_ = jitter;
      break;
    }
    if (jitter >= kMaxJitter) throw NumericalError("surrogate: covariance not positive definite even with jitter 1e-2");
    jitter = std::min(std::max(jitter * 10.0, 1e-6), kMaxJitter);
    log::debug("surrogate: escalating jitter");
  }
  Vector r(nm);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < m; ++c) {
      r[i * m + c] = (y_(i, c) - shift_[c]) / scale_[c] - prior_mean_std_(i, c);
    }
  }
  const Vector w = lower_solve(chol_, r);
  alpha_ = nm == 0 ? Vector(0) : Vector(chol_.transpose().triangularView<Eigen::Upper>().solve(w));
  lml_ = -0.5 * w.squaredNorm() - chol_.diagonal().array().log().sum() - 0.5 * nm * std::log(2.0 * std::numbers::pi);
}

MfcgpPosterior MfcgpPosterior::fit(const ConfigSpace& space, const std::vector<Vector>& x, const std::vector<double>& s,
                                   const Matrix& y, const KernelSpec& spec, const CausalPrior& prior,
                                   const FitOptions& options) {
  const int n = static_cast<int>(x.size());
  const int m = spec.outputs();
  if (static_cast<int>(s.size()) != n || y.rows() != n) throw DomainError("fit: inconsistent training sizes");
  if (n > 0 && y.cols() != m) throw DomainError("fit: target width differs from the kernel outputs");
  if (prior.outputs() != m) throw DomainError("fit: prior outputs differ from the kernel outputs");
  if (spec.input_lengthscales.size() != space.dims()) throw DomainError("fit: lengthscale count differs from dims");
  if (spec.coreg_factor.rows() != m) throw DomainError("fit: coregionalization factor has wrong row count");
  if (!y.allFinite()) throw DomainError("fit: non-finite targets");

  MfcgpPosterior p;
  p.space_ = space;
  p.spec_ = spec;
  p.prior_ = prior;
  p.x_ = x;
  p.s_ = s;
  p.y_ = n > 0 ? y : Matrix(0, m);
  p.standardize_ = options.standardize;
  p.seed_ = options.seed;
  for (const auto& xi : x) p.u_.push_back(normalize_config(space, xi));

  p.shift_ = Vector::Zero(m);
  p.scale_ = Vector::Ones(m);
  if (options.standardize && n >= 1) {
    p.shift_ = p.y_.colwise().mean().transpose();
    if (n >= 2) {
      for (int c = 0; c < m; ++c) {
        const double sd = std::sqrt((p.y_.col(c).array() - p.shift_[c]).square().mean());
        p.scale_[c] = sd > 1e-9 ? sd : 1.0;
      }
    }
  }
  p.prior_mean_std_.resize(n, m);
  p.prior_sd_std_.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const auto v = p.prior_std_units(x[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(i)]);
    p.prior_mean_std_.row(i) = v.mean.transpose();
    p.prior_sd_std_.row(i) = v.std.transpose();
  }

  if (!options.hyperopt || n == 0) {
    p.factorize();
    return p;
  }

  const Layout lay{space.dims(), m, static_cast<int>(spec.coreg_factor.cols()), !prior.agnostic()};
  std::vector<double> lo, hi, init_lo, init_hi, step0;
  parameter_boxes(options.bounds, lay, lo, hi, init_lo, init_hi, step0);
  auto evaluate = [&p, &lay](const std::vector<double>& theta) {
    p.spec_ = unpack(theta, p.spec_, lay);
    try {
      p.factorize();
      return std::isfinite(p.lml_) ? p.lml_ : -std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto clamp_theta = [&](std::vector<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], lo[i], hi[i]);
  };

  std::mt19937_64 rng(options.seed);
  std::vector<double> best = pack(spec, lay);
  clamp_theta(best);
  double best_f = evaluate(best);
  for (int restart = 0; restart < options.restarts; ++restart) {
    std::vector<double> theta(best.size());
    if (restart == 0) {
      theta = pack(spec, lay);
      clamp_theta(theta);
    } else {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] = std::uniform_real_distribution<double>(init_lo[i], init_hi[i])(rng);
      }
    }
    double f = evaluate(theta);
    int evals = 1;
    std::vector<double> step = step0;
    while (evals < options.evaluations_per_restart) {
      for (std::size_t i = 0; i < theta.size() && evals < options.evaluations_per_restart; ++i) {
        bool moved = false;
        for (double sign : {1.0, -1.0}) {
          if (evals >= options.evaluations_per_restart) break;
          std::vector<double> cand = theta;
          cand[i] = std::clamp(theta[i] + sign * step[i], lo[i], hi[i]);
          if (cand[i] == theta[i]) continue;
          const double fc = evaluate(cand);
          ++evals;
          if (fc > f) {
            theta = std::move(cand);
            f = fc;
            step[i] *= 1.5;
            moved = true;
            break;
          }
        }
        if (!moved) step[i] *= 0.5;
      }
    }
    if (f > best_f) {
      best_f = f;
      best = theta;
    }
  }
  p.spec_ = unpack(best, p.spec_, lay);
  p.factorize();
  return p;
}

Prediction MfcgpPosterior::prior_at(const Vector& x, double s) const {
  const Vector u = normalize_config(space_, x);
  const auto pv = prior_std_units(x, s);
  const Matrix k = cross_prior(u, s, pv.std, u, s, pv.std);
  Prediction out;
  out.mean = (pv.mean.array() * scale_.array() + shift_.array()).matrix();
  out.cov = scale_.asDiagonal() * k * scale_.asDiagonal();
  return out;
}

Prediction MfcgpPosterior::predict(const Vector& x, double s) const {
  const Vector u = normalize_config(space_, x);
  const auto pv = prior_std_units(x, s);
  Matrix cov = cross_prior(u, s, pv.std, u, s, pv.std);
  Vector mean = pv.mean;
  if (size() > 0) {
    const Matrix kq = train_cross(u, s, pv.std);
    mean += kq.transpose() * alpha_;
    const Matrix v = lower_solve(chol_, kq);
    cov -= v.transpose() * v;
  }
  cov = 0.5 * (cov + cov.transpose());
  for (int c = 0; c < cov.rows(); ++c) cov(c, c) = std::max(cov(c, c), 0.0);
  Prediction out;
  out.mean = (mean.array() * scale_.array() + shift_.array()).matrix();
  out.cov = scale_.asDiagonal() * cov * scale_.asDiagonal();
  return out;
}

std::vector<Prediction> MfcgpPosterior::predict(const std::vector<Vector>& x, const std::vector<double>& s) const {
  if (x.size() != s.size()) throw DomainError("predict: x and s sizes differ");
  std::vector<Prediction> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back(predict(x[i], s[i]));
  return out;
}

Matrix MfcgpPosterior::cross_covariance(const Vector& xa, double sa, const Vector& xb, double sb) const {
  const Vector ua = normalize_config(space_, xa), ub = normalize_config(space_, xb);
  const auto pa = prior_std_units(xa, sa), pb = prior_std_units(xb, sb);
  Matrix k = cross_prior(ua, sa, pa.std, ub, sb, pb.std);
  if (size() > 0) {
    const Matrix va = lower_solve(chol_, train_cross(ua, sa, pa.std));
    const Matrix vb = lower_solve(chol_, train_cross(ub, sb, pb.std));
    k -= va.transpose() * vb;
  }
  return scale_.asDiagonal() * k * scale_.asDiagonal();
}

MfcgpPosterior MfcgpPosterior::condition_on(const Vector& x, double s, const Vector& y) const {
  const int m = outputs();
  if (y.size() != m) throw DomainError("condition_on: wrong observation length");
  MfcgpPosterior p = *this;
  const Vector u = normalize_config(space_, x);
  const auto pv = prior_std_units(x, s);
  const Matrix kq = train_cross(u, s, pv.std);
  const Matrix l21t = lower_solve(chol_, kq);  // NM x M
  Matrix knn = cross_prior(u, s, pv.std, u, s, pv.std);
  knn.diagonal().array() += spec_.noise_variance + jitter_used_;
  const Matrix schur = knn - l21t.transpose() * l21t;

  p.x_.push_back(x);
  p.u_.push_back(u);
  p.s_.push_back(s);
  p.y_.conservativeResize(size() + 1, m);
  p.y_.row(size()) = y.transpose();
  p.prior_mean_std_.conservativeResize(size() + 1, m);
  p.prior_mean_std_.row(size()) = pv.mean.transpose();
  p.prior_sd_std_.conservativeResize(size() + 1, m);
  p.prior_sd_std_.row(size()) = pv.std.transpose();

  Eigen::LLT<Matrix> llt(schur);
  const Matrix l22 = llt.matrixL();
  if (llt.info() != Eigen::Success || l22.diagonal().minCoeff() <= 0.0) {
    log::debug("condition_on: block update failed, refactorizing");
    p.factorize();
    return p;
  }
  const int nm = size() * m;
  Matrix chol = Matrix::Zero(nm + m, nm + m);
  chol.topLeftCorner(nm, nm) = chol_;
  chol.bottomLeftCorner(m, nm) = l21t.transpose();
  chol.bottomRightCorner(m, m) = l22;
  p.chol_ = std::move(chol);

  Vector r(nm + m);
  for (int i = 0; i <= size(); ++i) {
    for (int c = 0; c < m; ++c) r[i * m + c] = (p.y_(i, c) - shift_[c]) / scale_[c] - p.prior_mean_std_(i, c);
  }
  const Vector w = p.chol_.triangularView<Eigen::Lower>().solve(r);
  p.alpha_ = p.chol_.transpose().triangularView<Eigen::Upper>().solve(w);
  p.lml_ = -0.5 * w.squaredNorm() - p.chol_.diagonal().array().log().sum() -
           0.5 * (nm + m) * std::log(2.0 * std::numbers::pi);
  return p;
}

std::vector<Vector> MfcgpPosterior::draw_fantasies(const Vector& x, double s, int n, std::uint64_t seed) const {
  if (n < 1) throw DomainError("fantasize: n_fantasies must be >= 1");
  const auto pred = predict(x, s);
  Matrix cov = pred.cov;
  cov.diagonal() += (scale_.array().square() * spec_.noise_variance).matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cov + cov.transpose()));
  const Vector lam = eig.eigenvalues().cwiseMax(1e-10);
  const Matrix root = eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vector z(outputs());
    for (int c = 0; c < outputs(); ++c) z[c] = n01(rng);
    out.push_back(pred.mean + root * z);
  }
  return out;
}

std::vector<FantasyModel> MfcgpPosterior::fantasize(const Vector& x, double s, int n, std::uint64_t seed) const {
  std::vector<FantasyModel> out;
  for (auto& y : draw_fantasies(x, s, n, seed)) {
    out.push_back(FantasyModel{std::make_shared<const MfcgpPosterior>(condition_on(x, s, y)), y});
  }
  return out;
}

PreparedQueries MfcgpPosterior::prepare(const std::vector<Vector>& x, const std::vector<double>& s) const {
  if (x.size() != s.size()) throw DomainError("prepare: x and s sizes differ");
  const int m = outputs();
  const int q = static_cast<int>(x.size());
  PreparedQueries out;
  out.x = x;
  out.s = s;
  Matrix kall(size() * m, q * m);
  std::vector<Vector> prior_mean;
  for (int i = 0; i < q; ++i) {
    out.u.push_back(normalize_config(space_, x[static_cast<std::size_t>(i)]));
    const auto pv = prior_std_units(x[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(i)]);
    out.prior_sd.push_back(pv.std);
    prior_mean.push_back(pv.mean);
    if (size() > 0) kall.middleCols(i * m, m) = train_cross(out.u.back(), s[static_cast<std::size_t>(i)], pv.std);
  }
  out.v = lower_solve(chol_, kall);
  for (int i = 0; i < q; ++i) {
    Vector mean = prior_mean[static_cast<std::size_t>(i)];
    if (size() > 0) mean += kall.middleCols(i * m, m).transpose() * alpha_;
    out.mean.push_back((mean.array() * scale_.array() + shift_.array()).matrix());
  }
  return out;
}

std::vector<std::vector<Vector>> MfcgpPosterior::fantasy_means(const PreparedQueries& queries, const Vector& x, double s,
                                                               const std::vector<Vector>& ys) const {
  const int m = outputs();
  const int q = static_cast<int>(queries.x.size());
  const Vector u = normalize_config(space_, x);
  const auto pc = prior_std_units(x, s);
  Matrix vc(0, m);
  Vector mean_c = pc.mean;
  if (size() > 0) {
    const Matrix kc = train_cross(u, s, pc.std);
    vc = lower_solve(chol_, kc);
    mean_c += kc.transpose() * alpha_;
  }
  Matrix kcc = cross_prior(u, s, pc.std, u, s, pc.std) - vc.transpose() * vc;
  kcc.diagonal().array() += spec_.noise_variance + jitter_used_;
  const Eigen::LDLT<Matrix> solver(kcc);

  // Posterior cross-covariance between every query and the candidate.
  Matrix cross(q * m, m);
  for (int i = 0; i < q; ++i) {
    cross.middleRows(i * m, m) = cross_prior(queries.u[static_cast<std::size_t>(i)], queries.s[static_cast<std::size_t>(i)],
                                             queries.prior_sd[static_cast<std::size_t>(i)], u, s, pc.std);
  }
  if (size() > 0) cross -= queries.v.transpose() * vc;
  const Matrix gain = cross * solver.solve(Matrix::Identity(m, m));  // qM x M

  std::vector<std::vector<Vector>> out;
  out.reserve(ys.size());
  for (const auto& y : ys) {
    const Vector delta = ((y - shift_).array() / scale_.array()).matrix() - mean_c;
    const Vector upd = gain * delta;
    std::vector<Vector> means;
    means.reserve(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
      means.push_back(queries.mean[static_cast<std::size_t>(i)] +
                      (upd.segment(i * m, m).array() * scale_.array()).matrix());
    }
    out.push_back(std::move(means));
  }
  return out;
}

nlohmann::json MfcgpPosterior::snapshot() const {
  nlohmann::json j;
  j["version"] = 1;
  j["kernel"] = spec_.to_json();
  j["standardize"] = standardize_;
  j["seed"] = seed_;
  j["outputs"] = outputs();
  auto xs = nlohmann::json::array();
  auto ys = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) {
    const auto& xi = x_[static_cast<std::size_t>(i)];
    xs.push_back(std::vector<double>(xi.data(), xi.data() + xi.size()));
    std::vector<double> row;
    for (int c = 0; c < outputs(); ++c) row.push_back(y_(i, c));
    ys.push_back(row);
  }
  j["x"] = xs;
  j["s"] = s_;
  j["y"] = ys;
  return j;
}

MfcgpPosterior MfcgpPosterior::restore(const nlohmann::json& j, const ConfigSpace& space, const CausalPrior& prior) {
  if (j.value("version", 0) != 1) throw ConfigError("surrogate snapshot: unsupported version");
  const KernelSpec spec = KernelSpec::from_json(j.at("kernel"));
  std::vector<Vector> x;
  for (const auto& row : j.at("x")) {
    const auto v = row.get<std::vector<double>>();
    x.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  const auto s = j.at("s").get<std::vector<double>>();
  const auto yrows = j.at("y").get<std::vector<std::vector<double>>>();
  Matrix y(static_cast<Eigen::Index>(yrows.size()), spec.outputs());
  for (std::size_t i = 0; i < yrows.size(); ++i) {
    for (int c = 0; c < spec.outputs(); ++c) y(static_cast<Eigen::Index>(i), c) = yrows[i][static_cast<std::size_t>(c)];
  }
  FitOptions opt;
  opt.standardize = j.at("standardize").get<bool>();
  opt.seed = j.at("seed").get<std::uint64_t>();
  return fit(space, x, s, y, spec, prior, opt);
}

// --------------------------------------------------------------------------

namespace {

MfcgpPosterior fit_block(const Dataset& data, const ConfigSpace& space, const KernelSpec& spec, const CausalPrior& prior,
                         const FitOptions& options, bool constraints) {
  std::vector<Vector> x;
  std::vector<double> s;
  Matrix y(data.size(), spec.outputs());
  for (int i = 0; i < data.size(); ++i) {
    x.push_back(data[i].x);
    s.push_back(data[i].s);
    const Vector& v = constraints ? data[i].h : data[i].y;
    if (v.size() != spec.outputs()) throw DomainError("fit: record width differs from the kernel outputs");
    y.row(i) = v.transpose();
  }
  return MfcgpPosterior::fit(space, x, s, y, spec, prior, options);
}

}  // namespace

MfcgpPosterior fit_objectives(const Dataset& data, const ConfigSpace& space, const KernelSpec& spec,
                              const CausalPrior& prior, const FitOptions& options) {
  return fit_block(data, space, spec, prior, options, false);
}

MfcgpPosterior fit_constraints(const Dataset& data, const ConfigSpace& space, const KernelSpec& spec,
                               const CausalPrior& prior, const FitOptions& options) {
  return fit_block(data, space, spec, prior, options, true);
}

std::vector<Marginal> constraint_posterior(const MfcgpPosterior* constraints, const Vector& x, double s) {
  std::vector<Marginal> out;
  if (constraints == nullptr || constraints->outputs() == 0) return out;
  const auto p = constraints->predict(x, s);
  const Vector sd = p.std();
  for (int q = 0; q < constraints->outputs(); ++q) out.push_back(Marginal{p.mean[q], sd[q]});
  return out;
}

}  // namespace rescue::surrogate
