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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>

#include "rescue/causal.hpp"
#include "rescue/errors.hpp"
#include "rescue/surrogate.hpp"

using namespace rescue;
using namespace rescue::surrogate;

namespace {

const ConfigSpace kSpace({{0.0, 1.0}, {0.0, 2.0}});

// X1, X2 options, s exogenous; Y1 <- X1, s; Y2 <- X2, Y1.
std::shared_ptr<const causal::CausalModel> hand_model() {
  using causal::Mechanism;
  causal::CausalGraph g({{"X1", 0, false}, {"X2", 0, false}, {"s", 0, true}, {"Y1", 2, false}, {"Y2", 2, false}});
  g.add_edge(0, 3);
  g.add_edge(2, 3);
  g.add_edge(1, 4);
  g.add_edge(3, 4);
  Vector w1(2), w2(2);
  w1 << 1.5, -0.5;
  w2 << 0.7, 0.4;
  std::vector<Mechanism> m{Mechanism{{}, Vector(0), 0.5, 0.1}, Mechanism{{}, Vector(0), 1.0, 0.3},
                           Mechanism{{}, Vector(0), 1.0, 0.0}, Mechanism{{0, 2}, w1, 0.2, 0.04},
                           Mechanism{{1, 3}, w2, -0.3, 0.09}};
  causal::LinearGaussianScm scm(g, m);
  causal::VariableMap map{{0, 1}, 2, {}, {3, 4}, {}};
  return std::make_shared<const causal::CausalModel>(scm, map, kSpace, causal::CausalModelOptions{256, 3});
}

struct Instance {
  std::vector<Vector> x;
  std::vector<double> s;
  Matrix y;
};

Instance random_instance(std::mt19937_64& rng, int n, int m, bool multi_fidelity = true) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Instance in;
  in.y.resize(n, m);
  for (int i = 0; i < n; ++i) {
    Vector x(2);
    x << u(rng), 2.0 * u(rng);
    in.x.push_back(x);
    in.s.push_back(multi_fidelity ? (u(rng) < 0.5 ? 0.4 : 1.0) : 1.0);
    for (int c = 0; c < m; ++c) in.y(i, c) = std::sin(3.0 * x[0] + c) + 0.5 * x[1] * in.s.back();
  }
  return in;
}

KernelSpec random_spec(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  KernelSpec k = KernelSpec::defaults(2, m);
  k.input_lengthscales << 0.2 + u(rng), 0.2 + u(rng);
  k.fidelity_lengthscale = 0.3 + u(rng);
  for (Eigen::Index i = 0; i < k.coreg_factor.size(); ++i) k.coreg_factor.data()[i] = u(rng) - 0.5;
  for (int i = 0; i < m; ++i) k.coreg_log_diag[i] = u(rng) - 0.5;
  k.prior_scale = u(rng);
  k.noise_variance = 1e-3 * (1.0 + u(rng));
  return k;
}

// Independent oracle: dense Gram from kernel_eval and a full-pivot LU solve.
Prediction dense_oracle(const MfcgpPosterior& p, const Vector& xq, double sq) {
  const int m = p.outputs();
  const int n = p.size();
  const auto& k = p.kernel();
  auto unit = [](const Vector& x) { return normalize_config(kSpace, x); };
  std::vector<CausalPrior::Value> pv;
  for (int i = 0; i < n; ++i) pv.push_back(p.prior().at(p.train_x()[i], p.train_s()[i]));
  const auto pq = p.prior().at(xq, sq);
  Matrix g(n * m, n * m), kq(n * m, m), kqq(m, m);
  Vector r(n * m);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      r[i * m + a] = p.train_y()(i, a) - pv[i].mean[a];
      for (int j = 0; j < n; ++j) {
        for (int b = 0; b < m; ++b) {
          g(i * m + a, j * m + b) = kernel_eval(k, unit(p.train_x()[i]), p.train_s()[i], pv[i].std, a,
                                                unit(p.train_x()[j]), p.train_s()[j], pv[j].std, b);
        }
      }
      for (int b = 0; b < m; ++b) {
        kq(i * m + a, b) = kernel_eval(k, unit(p.train_x()[i]), p.train_s()[i], pv[i].std, a, unit(xq), sq, pq.std, b);
      }
    }
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) kqq(a, b) = kernel_eval(k, unit(xq), sq, pq.std, a, unit(xq), sq, pq.std, b);
  }
  g.diagonal().array() += k.noise_variance + p.jitter_used();
  Eigen::FullPivLU<Matrix> lu(g);
  Prediction out;
  out.mean = pq.mean + kq.transpose() * lu.solve(r);
  out.cov = kqq - kq.transpose() * lu.solve(kq);
  return out;
}

}  // namespace

TEST_CASE("kernel examples") {
  KernelSpec k = KernelSpec::defaults(1, 2);
  k.prior_scale = 0.0;
  const Vector sd = Vector::Zero(2);
  const Vector a = Vector::Constant(1, 0.3);
  CHECK(kernel_eval(k, a, 1.0, sd, 0, a, 1.0, sd, 0) == doctest::Approx(1.0));
  CHECK(kernel_eval(k, a, 1.0, sd, 0, a, 1.0, sd, 1) == 0.0);
  const Vector b = Vector::Constant(1, 0.8);
  CHECK(kernel_eval(k, a, 1.0, sd, 0, b, 1.0, sd, 0) == doctest::Approx(0.60653).epsilon(1e-5));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const auto spec = random_spec(rng, 2);
    Vector u1(2), u2(2), s1(2), s2(2);
    u1 << u(rng), u(rng);
    u2 << u(rng), u(rng);
    s1 << u(rng), u(rng);
    s2 << u(rng), u(rng);
    const double z1 = u(rng), z2 = u(rng);
    CHECK(kernel_eval(spec, u1, z1, s1, 0, u2, z2, s2, 1) ==
          doctest::Approx(kernel_eval(spec, u2, z2, s2, 1, u1, z1, s1, 0)).epsilon(1e-14));
  }
  Matrix bmat = random_spec(rng, 3).coregionalization();
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(bmat).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("single point gram") {
  KernelSpec k = KernelSpec::defaults(2, 1);
  k.noise_variance = 0.25;
  Vector x(2);
  x << 0.5, 1.0;
  const auto p = MfcgpPosterior::fit(kSpace, {x}, {1.0}, Matrix::Constant(1, 1, 2.0), k, CausalPrior(1));
  const double kv = 1.0, denom = kv + 0.25 + p.jitter_used();
  const auto pred = p.predict(x, 1.0);
  CHECK(pred.mean[0] == doctest::Approx(2.0 * kv / denom).epsilon(1e-12));
  CHECK(pred.cov(0, 0) == doctest::Approx(kv - kv * kv / denom).epsilon(1e-12));
  CHECK(p.log_marginal_likelihood() ==
        doctest::Approx(-0.5 * 4.0 / denom - 0.5 * std::log(denom) - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("posterior interpolates at tiny noise") {
  std::mt19937_64 rng(2);
  const auto in = random_instance(rng, 12, 2);
  KernelSpec k = KernelSpec::defaults(2, 2);
  k.noise_variance = 1e-8;
  k.input_lengthscales << 0.3, 0.3;
  for (bool standardize : {false, true}) {
    FitOptions opt;
    opt.standardize = standardize;
    const auto p = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, k, CausalPrior(hand_model(), CausalPrior::Block::kObjectives), opt);
    for (int i = 0; i < 12; ++i) {
      const auto pred = p.predict(in.x[i], in.s[i]);
      CHECK((pred.mean - in.y.row(i).transpose()).cwiseAbs().maxCoeff() <= 1e-4);
    }
  }
}

TEST_CASE("posterior matches a dense oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto model = hand_model();
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 6;
    const auto in = random_instance(rng, n, 2);
    const auto spec = random_spec(rng, 2);
    const CausalPrior prior = (t % 2 == 0) ? CausalPrior(model, CausalPrior::Block::kObjectives) : CausalPrior(2);
    const auto p = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, spec, prior);
    for (int q = 0; q < 5; ++q) {
      Vector xq(2);
      xq << u(rng), 2.0 * u(rng);
      const double sq = u(rng);
      const auto a = p.predict(xq, sq);
      const auto b = dense_oracle(p, xq, sq);
      CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("one-dimensional two-point oracle") {
  const ConfigSpace line({{0.0, 1.0}});
  KernelSpec k = KernelSpec::defaults(1, 1);
  k.input_lengthscales[0] = 0.4;
  k.noise_variance = 0.01;
  k.jitter = 0.0;
  const auto p = MfcgpPosterior::fit(line, {Vector::Constant(1, 0.2), Vector::Constant(1, 0.7)}, {1.0, 1.0},
                                     Eigen::Vector2d(1.0, -1.0), k, CausalPrior(1));
  auto kf = [](double a, double b) { return std::exp(-0.5 * (a - b) * (a - b) / 0.16); };
  Eigen::Matrix2d g;
  g << 1.01, kf(0.2, 0.7), kf(0.2, 0.7), 1.01;
  const Eigen::Vector2d kq(kf(0.2, 0.5), kf(0.7, 0.5));
  const double mean = kq.dot(g.inverse() * Eigen::Vector2d(1.0, -1.0));
  const double var = 1.0 - kq.dot(g.inverse() * kq);
  const auto pred = p.predict(Vector::Constant(1, 0.5), 1.0);
  CHECK(pred.mean[0] == doctest::Approx(mean).epsilon(1e-10));
  CHECK(pred.cov(0, 0) == doctest::Approx(var).epsilon(1e-10));
}

TEST_CASE("empty data and distant queries give the prior") {
  const auto model = hand_model();
  const CausalPrior prior(model, CausalPrior::Block::kObjectives);
  KernelSpec k = KernelSpec::defaults(2, 2);
  const auto empty = MfcgpPosterior::fit(kSpace, {}, {}, Matrix(0, 2), k, prior);
  Vector xq(2);
  xq << 0.3, 1.1;
  const auto pe = empty.predict(xq, 0.7);
  const auto pr = empty.prior_at(xq, 0.7);
  CHECK((pe.mean - pr.mean).norm() == 0.0);
  CHECK((pe.cov - pr.cov).norm() <= 1e-14);
  CHECK((pe.mean - model->objectives(xq, 0.7).mean).norm() == 0.0);

  k.input_lengthscales << 0.01, 0.01;
  Vector x0(2);
  x0 << 0.0, 0.0;
  Matrix y(1, 2);
  y << 5.0, -5.0;
  const auto far = MfcgpPosterior::fit(kSpace, {x0}, {1.0}, y, k, prior);
  Vector xf(2);
  xf << 0.2, 0.0;  // 20 lengthscales away in the unit cube
  // The causal variance term does not decay with distance, so a far point
  // stays correlated through it; the stationary part alone returns the prior.
  CHECK((far.predict(xf, 1.0).mean - far.prior_at(xf, 1.0).mean).cwiseAbs().maxCoeff() > 1e-3);
  KernelSpec k0 = k;
  k0.prior_scale = 0.0;
  const auto far0 = MfcgpPosterior::fit(kSpace, {x0}, {1.0}, y, k0, prior);
  const auto a = far0.predict(xf, 1.0);
  const auto b = far0.prior_at(xf, 1.0);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("variance monotonicity") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto model = hand_model();
  for (int t = 0; t < 100; ++t) {
    const auto in = random_instance(rng, 1 + t % 7, 2);
    const auto spec = random_spec(rng, 2);
    const auto p = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, spec, CausalPrior(model, CausalPrior::Block::kObjectives));
    Vector xq(2), xa(2);
    xq << u(rng), 2.0 * u(rng);
    xa << u(rng), 2.0 * u(rng);
    const double sq = u(rng), sa = u(rng) < 0.5 ? 0.4 : 1.0;
    const auto before = p.predict(xq, sq);
    const auto prior = p.prior_at(xq, sq);
    CHECK((before.cov.diagonal() - prior.cov.diagonal()).maxCoeff() <= 1e-8);
    const auto after = p.condition_on(xa, sa, Vector::Constant(2, u(rng))).predict(xq, sq);
    CHECK((after.cov.diagonal() - before.cov.diagonal()).maxCoeff() <= 1e-8);
  }
}

TEST_CASE("rank update equals refit") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto model = hand_model();
  for (int t = 0; t < 20; ++t) {
    const auto in = random_instance(rng, 1 + t % 8, 2);
    const auto spec = random_spec(rng, 2);
    const CausalPrior prior(model, CausalPrior::Block::kObjectives);
    const auto p = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, spec, prior);
    Vector xn(2);
    xn << u(rng), 2.0 * u(rng);
    const double sn = 0.4;
    const auto fantasies = p.fantasize(xn, sn, 3, 100 + t);
    for (const auto& f : fantasies) {
      auto x2 = in.x;
      auto s2 = in.s;
      x2.push_back(xn);
      s2.push_back(sn);
      Matrix y2(in.y.rows() + 1, 2);
      y2 << in.y, f.y.transpose();
      const auto refit = MfcgpPosterior::fit(kSpace, x2, s2, y2, spec, prior);
      CHECK(f.posterior->log_marginal_likelihood() == doctest::Approx(refit.log_marginal_likelihood()).epsilon(1e-9));
      for (int q = 0; q < 4; ++q) {
        Vector xq(2);
        xq << u(rng), 2.0 * u(rng);
        const auto a = f.posterior->predict(xq, 1.0);
        const auto b = refit.predict(xq, 1.0);
        CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() <= 1e-8);
      }
      // Interpolation at the fantasized point for small noise.
      CHECK((f.posterior->predict(xn, sn).mean - f.y).cwiseAbs().maxCoeff() <= 0.05);
    }
  }
}

TEST_CASE("fast fantasy means equal conditioned posteriors") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (bool standardize : {false, true}) {
    const auto in = random_instance(rng, 6, 2);
    FitOptions opt;
    opt.standardize = standardize;
    const auto p = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, random_spec(rng, 2),
                                       CausalPrior(hand_model(), CausalPrior::Block::kObjectives), opt);
    std::vector<Vector> qx;
    std::vector<double> qs;
    for (int i = 0; i < 16; ++i) {
      Vector x(2);
      x << u(rng), 2.0 * u(rng);
      qx.push_back(x);
      qs.push_back(1.0);
    }
    const auto prep = p.prepare(qx, qs);
    Vector xc(2);
    xc << 0.4, 0.9;
    const auto ys = p.draw_fantasies(xc, 0.4, 4, 9);
    const auto fast = p.fantasy_means(prep, xc, 0.4, ys);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const auto slow = p.condition_on(xc, 0.4, ys[i]);
      for (int q = 0; q < 16; ++q) {
        CHECK((fast[i][q] - slow.predict(qx[q], 1.0).mean).cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
    for (int q = 0; q < 16; ++q) CHECK((prep.mean[q] - p.predict(qx[q], 1.0).mean).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("fantasy moments") {
  std::mt19937_64 rng(7);
  const auto in = random_instance(rng, 5, 2);
  KernelSpec k = random_spec(rng, 2);
  const auto p = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, k, CausalPrior(2));
  Vector xq(2);
  xq << 0.55, 0.3;
  const auto pred = p.predict(xq, 1.0);
  const auto ys = p.draw_fantasies(xq, 1.0, 10000, 42);
  Vector mean = Vector::Zero(2);
  for (const auto& y : ys) mean += y;
  mean /= 10000.0;
  const Vector sd = (pred.cov.diagonal().array() + k.noise_variance).sqrt();
  for (int c = 0; c < 2; ++c) CHECK(std::abs(mean[c] - pred.mean[c]) <= 3.0 * sd[c] / 100.0);
  CHECK(p.draw_fantasies(xq, 1.0, 5, 1) == p.draw_fantasies(xq, 1.0, 5, 1));
  CHECK_THROWS(p.draw_fantasies(xq, 1.0, 0, 1));

  // At a training point with vanishing noise the predictive collapses.
  KernelSpec tiny = KernelSpec::defaults(2, 2);
  tiny.noise_variance = 1e-10;
  tiny.jitter = 1e-10;
  const auto q = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, tiny, CausalPrior(2));
  const auto fy = q.draw_fantasies(in.x[0], in.s[0], 8, 3);
  for (const auto& y : fy) CHECK((y - fy[0]).cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("independent objectives without coupling") {
  std::mt19937_64 rng(8);
  const auto in = random_instance(rng, 7, 2, false);
  KernelSpec k = KernelSpec::defaults(2, 2);
  k.prior_scale = 0.0;
  k.noise_variance = 1e-3;
  const auto joint = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, k, CausalPrior(2));
  KernelSpec k1 = KernelSpec::defaults(2, 1);
  k1.prior_scale = 0.0;
  k1.noise_variance = 1e-3;
  Vector xq(2);
  xq << 0.6, 1.4;
  for (int c = 0; c < 2; ++c) {
    const auto single = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y.col(c), k1, CausalPrior(1));
    const auto a = joint.predict(xq, 1.0);
    const auto b = single.predict(xq, 1.0);
    CHECK(std::abs(a.mean[c] - b.mean[0]) <= 1e-8);
    CHECK(std::abs(a.cov(c, c) - b.cov(0, 0)) <= 1e-8);
  }
}

TEST_CASE("hyperparameter search improves the marginal likelihood") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto in = random_instance(rng, 10, 2);
    const KernelSpec k = KernelSpec::defaults(2, 2);
    const CausalPrior prior(hand_model(), CausalPrior::Block::kObjectives);
    FitOptions plain;
    plain.standardize = true;
    FitOptions tuned = plain;
    tuned.hyperopt = true;
    tuned.seed = seed;
    const double before = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, k, prior, plain).log_marginal_likelihood();
    const auto after = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, k, prior, tuned);
    CHECK(after.log_marginal_likelihood() >= before);
    const auto& ks = after.kernel();
    CHECK(ks.input_lengthscales.minCoeff() >= 1e-2 - 1e-12);
    CHECK(ks.input_lengthscales.maxCoeff() <= 1e2 + 1e-9);
    CHECK(ks.noise_variance >= 1e-8 * (1 - 1e-9));
    CHECK(ks.noise_variance <= 1.0 + 1e-9);
    CHECK(ks.prior_scale >= 0.0);
    CHECK(ks.prior_scale <= 10.0);
    const auto again = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, k, prior, tuned);
    CHECK(again.log_marginal_likelihood() == after.log_marginal_likelihood());
  }
}

TEST_CASE("jitter escalation") {
  KernelSpec k = KernelSpec::defaults(2, 1);
  k.noise_variance = 0.0;
  k.jitter = 0.0;
  Vector x(2);
  x << 0.5, 0.5;
  const auto p = MfcgpPosterior::fit(kSpace, {x, x}, {1.0, 1.0}, Eigen::Vector2d(1.0, 1.0), k, CausalPrior(1));
  CHECK(p.jitter_used() > 0.0);
  CHECK(p.jitter_used() <= 1e-2);
}

TEST_CASE("gram symmetry and prior cache") {
  const auto model = hand_model();
  const CausalPrior prior(model, CausalPrior::Block::kObjectives);
  Vector x(2);
  x << 0.25, 1.0;
  prior.at(x, 1.0);
  prior.at(x, 1.0);
  Vector x2 = x;
  x2[0] += 1e-13;
  prior.at(x2, 1.0);
  CHECK(prior.cache_size() == 1);
  const CausalPrior copy = prior;
  copy.at(x, 0.5);
  CHECK(prior.cache_size() == 2);
  CHECK(CausalPrior(2).agnostic());
  CHECK(CausalPrior(2).at(x, 1.0).mean == Vector::Zero(2));
}

TEST_CASE("snapshot round trip") {
  std::mt19937_64 rng(9);
  const auto in = random_instance(rng, 6, 2);
  const CausalPrior prior(hand_model(), CausalPrior::Block::kObjectives);
  FitOptions opt;
  opt.hyperopt = true;
  opt.standardize = true;
  opt.restarts = 2;
  opt.evaluations_per_restart = 20;
  const auto p = MfcgpPosterior::fit(kSpace, in.x, in.s, in.y, KernelSpec::defaults(2, 2), prior, opt);
  const auto text = p.snapshot().dump();
  const auto back = MfcgpPosterior::restore(nlohmann::json::parse(text), kSpace, prior);
  Vector xq(2);
  xq << 0.1, 0.2;
  const auto a = p.predict(xq, 1.0), b = back.predict(xq, 1.0);
  CHECK(a.mean == b.mean);
  CHECK(a.cov == b.cov);
  CHECK(back.snapshot().dump() == text);
}

TEST_CASE("constraint block") {
  CHECK(constraint_posterior(nullptr, Vector::Zero(2), 1.0).empty());
  Dataset ds;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 6; ++i) {
    Vector x(2);
    x << u(rng), 2.0 * u(rng);
    ds.append(Observation{x, 1.0, Eigen::Vector2d(x[0], x[1]), Vector::Constant(1, x[0] + x[1]), Vector(), 1.0});
  }
  const auto obj = fit_objectives(ds, kSpace, KernelSpec::defaults(2, 2), CausalPrior(2));
  const auto con = fit_constraints(ds, kSpace, KernelSpec::defaults(2, 1), CausalPrior(1));
  const auto marg = constraint_posterior(&con, ds[0].x, 1.0);
  REQUIRE(marg.size() == 1);
  CHECK(marg[0].mean == doctest::Approx(ds[0].h[0]).epsilon(1e-2));
  CHECK(marg[0].std >= 0.0);
  // Objective predictions do not depend on the constraint block.
  Dataset other;
  for (const auto& r : ds.records()) {
    Observation o = r;
    o.h[0] = -o.h[0];
    other.append(o);
  }
  const auto obj2 = fit_objectives(other, kSpace, KernelSpec::defaults(2, 2), CausalPrior(2));
  CHECK(obj.predict(ds[1].x, 1.0).mean == obj2.predict(ds[1].x, 1.0).mean);
  CHECK_THROWS_AS(obj.predict(Eigen::Vector2d(2.0, 0.0), 1.0), DomainError);
}
