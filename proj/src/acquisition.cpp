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

#include "rescue/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rescue/errors.hpp"
#include "rescue/log.hpp"
#include "rescue/pareto.hpp"

namespace rescue::acquisition {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<int> feasible_indices(const Context& ctx, const std::vector<Vector>& xs, double threshold) {
  std::vector<int> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (is_feasible(feasibility_probability(ctx, xs[i]), threshold)) out.push_back(static_cast<int>(i));
  }
  if (out.empty()) {
    log::warn("acquisition: no inner candidate is predicted feasible; using all of them");
    for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(static_cast<int>(i));
  }
  return out;
}

double ci_hv(const Context& ctx, const std::vector<Vector>& xs, const std::vector<int>& idx) {
  if (ctx.objectives->prior().agnostic()) {
    // Zero estimates everywhere: a single point at the origin.
    return front_hv({Vector::Zero(ctx.objectives->outputs())}, ctx.reference);
  }
  std::vector<Vector> pts;
  for (int i : idx) pts.push_back(ctx.objectives->prior().at(xs[static_cast<std::size_t>(i)], kTargetFidelity).mean);
  return front_hv(pts, ctx.reference);
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Strict ordering used for the argmax: value, then cost, then x, then s.
bool better(double va, const Candidate& a, double vb, const Candidate& b) {
  const double tol = 1e-12 * std::max({1.0, std::abs(va), std::abs(vb)});
  if (std::abs(va - vb) > tol) return va > vb;
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.x != b.x) return lex_less(a.x, b.x);
  return a.s < b.s;
}

void check_context(const Context& ctx) {
  if (ctx.objectives == nullptr) throw StateError("acquisition: objective model missing");
  if (ctx.reference.size() != ctx.objectives->outputs()) throw DomainError("acquisition: reference point size mismatch");
  const int q = ctx.constraints == nullptr ? 0 : ctx.constraints->outputs();
  if (q > 0 && static_cast<int>(ctx.constraint_specs.size()) != q) {
    throw DomainError("acquisition: constraint specs do not match the constraint model");
  }
}

}  // namespace

void AcquisitionConfig::validate() const {
  if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("acquisition: w must lie in [0,1]");
  if (n_fantasies < 1 || n_inner_candidates < 1 || n_outer_candidates < 1 || continuous_fidelity_levels < 1) {
    throw ConfigError("acquisition: candidate and fantasy counts must be >= 1");
  }
  if (!(feasibility_threshold >= 0.0 && feasibility_threshold < 1.0)) {
    throw ConfigError("acquisition: feasibility threshold must lie in [0,1)");
  }
}

std::vector<double> feasibility_probability(const Context& ctx, const Vector& x, double s) {
  const auto marg = surrogate::constraint_posterior(ctx.constraints, x, s);
  std::vector<double> out;
  out.reserve(marg.size());
  for (std::size_t q = 0; q < marg.size(); ++q) {
    const auto& c = ctx.constraint_specs[q];
    const double diff = c.direction == ConstraintDirection::kAtLeast ? marg[q].mean - c.threshold
                                                                      : c.threshold - marg[q].mean;
    if (marg[q].std <= 1e-15) {
      out.push_back(diff > 0.0 ? 1.0 : (diff < 0.0 ? 0.0 : 0.5));
    } else {
      out.push_back(normal_cdf(diff / marg[q].std));
    }
  }
  return out;
}

bool is_feasible(const std::vector<double>& probabilities, double threshold) {
  return std::all_of(probabilities.begin(), probabilities.end(), [&](double p) { return p > threshold; });
}

double front_hv(const std::vector<Vector>& points, const Vector& reference) {
  if (points.empty()) return 0.0;
  return pareto::hypervolume(pareto::pareto_filter(points), reference);
}

double combined_hv(const Context& ctx, const std::vector<Vector>& candidates_x, double w) {
  check_context(ctx);
  std::vector<int> all(candidates_x.size());
  std::vector<Vector> means;
  for (std::size_t i = 0; i < candidates_x.size(); ++i) {
    all[i] = static_cast<int>(i);
    means.push_back(ctx.objectives->predict(candidates_x[i], kTargetFidelity).mean);
  }
  return front_hv(means, ctx.reference) + w * ci_hv(ctx, candidates_x, all);
}

double current_value(const Context& ctx, const std::vector<Vector>& candidates_x, double w, double threshold) {
  check_context(ctx);
  if (candidates_x.empty()) throw DomainError("current_value: no candidates");
  const auto idx = feasible_indices(ctx, candidates_x, threshold);
  std::vector<Vector> means;
  for (int i : idx) means.push_back(ctx.objectives->predict(candidates_x[static_cast<std::size_t>(i)], kTargetFidelity).mean);
  return front_hv(means, ctx.reference) + w * ci_hv(ctx, candidates_x, idx);
}

InnerSet::InnerSet(const Context& ctx, std::vector<Vector> candidates_x, const AcquisitionConfig& cfg)
    : ctx_(&ctx), cfg_(cfg), x_(std::move(candidates_x)) {
  check_context(ctx);
  if (x_.empty()) throw DomainError("acquisition: empty inner candidate set");
  active_ = feasible_indices(ctx, x_, cfg.feasibility_threshold);
  std::vector<Vector> xs;
  for (int i : active_) xs.push_back(x_[static_cast<std::size_t>(i)]);
  prepared_ = ctx.objectives->prepare(xs, std::vector<double>(xs.size(), kTargetFidelity));
  hv_ci_ = ci_hv(ctx, x_, active_);
  baseline_ = front_hv(prepared_.mean, ctx.reference) + cfg.w * hv_ci_;
}

double InnerSet::value(const Vector& x, double s, std::uint64_t seed) const {
  const auto ys = ctx_->objectives->draw_fantasies(x, s, cfg_.n_fantasies, seed);
  const auto means = ctx_->objectives->fantasy_means(prepared_, x, s, ys);
  double total = 0.0;
  for (const auto& m : means) total += front_hv(m, ctx_->reference) + cfg_.w * hv_ci_;
  const double gain = total / static_cast<double>(means.size()) - baseline_;
  return gain / ctx_->cost.cost(x, s);
}

double chvkg(const Context& ctx, const Vector& x, double s, const AcquisitionConfig& cfg) {
  cfg.validate();
  const InnerSet inner(ctx,
                       sampling::quasi_random_candidates(ctx.objectives->space(), cfg.n_inner_candidates, cfg.design,
                                                         derive_seed(cfg.seed, 2)),
                       cfg);
  return inner.value(x, s, derive_seed(cfg.seed, 3));
}

std::vector<std::pair<Vector, double>> outer_candidates(const Context& ctx, const AcquisitionConfig& cfg) {
  check_context(ctx);
  const auto xs = sampling::quasi_random_candidates(ctx.objectives->space(), cfg.n_outer_candidates, cfg.design,
                                                    derive_seed(cfg.seed, 1));
  const auto levels = ctx.fidelities.candidate_levels(cfg.continuous_fidelity_levels);
  std::vector<std::pair<Vector, double>> out;
  for (const auto& x : xs) {
    for (double s : levels) out.emplace_back(x, s);
  }
  return out;
}

namespace {

template <class ValueFn>
AcquisitionResult argmax_over(const Context& ctx, const std::vector<std::pair<Vector, double>>& outer,
                              const AcquisitionConfig& cfg, ValueFn value) {
  if (outer.empty()) throw DomainError("select_next: no outer candidates");
  AcquisitionResult res;
  res.table.reserve(outer.size());
  int best = -1;
  for (const auto& [x, s] : outer) {
    Candidate c;
    c.x = x;
    c.s = s;
    c.cost = ctx.cost.cost(x, s);
    c.feasibility = feasibility_probability(ctx, x);
    c.feasible = is_feasible(c.feasibility, cfg.feasibility_threshold);
    if (c.feasible) {
      c.value = value(x, s);
      c.evaluated = true;
    }
    res.table.push_back(std::move(c));
    const int k = static_cast<int>(res.table.size()) - 1;
    if (res.table[k].feasible && (best < 0 || better(res.table[k].value, res.table[k], res.table[best].value, res.table[best]))) {
      best = k;
    }
  }
  if (best < 0) {
    res.fallback = true;
    log::warn("select_next: no feasible candidate; choosing the most likely feasible one");
    auto worst_p = [](const Candidate& c) {
      return c.feasibility.empty() ? 1.0 : *std::min_element(c.feasibility.begin(), c.feasibility.end());
    };
    best = 0;
    for (int k = 1; k < static_cast<int>(res.table.size()); ++k) {
      if (better(worst_p(res.table[k]), res.table[k], worst_p(res.table[best]), res.table[best])) best = k;
    }
  }
  res.x = res.table[best].x;
  res.s = res.table[best].s;
  res.value = res.table[best].value;
  return res;
}

}  // namespace

AcquisitionResult select_from(const Context& ctx, const std::vector<std::pair<Vector, double>>& outer,
                              const std::vector<Vector>& inner_x, const AcquisitionConfig& cfg) {
  cfg.validate();
  const InnerSet inner(ctx, inner_x, cfg);
  const std::uint64_t fantasy_seed = derive_seed(cfg.seed, 3);
  auto res = argmax_over(ctx, outer, cfg, [&](const Vector& x, double s) { return inner.value(x, s, fantasy_seed); });
  res.baseline = inner.baseline();
  return res;
}

double ehvi(const Context& ctx, const std::vector<Vector>& observed_front, const Vector& x,
            const AcquisitionConfig& cfg) {
  check_context(ctx);
  const auto ys = ctx.objectives->draw_fantasies(x, kTargetFidelity, cfg.n_fantasies, derive_seed(cfg.seed, 3));
  const double base = front_hv(observed_front, ctx.reference);
  auto pts = observed_front;
  pts.push_back(Vector());
  double total = 0.0;
  for (const auto& y : ys) {
    pts.back() = y;
    total += front_hv(pts, ctx.reference) - base;
  }
  return total / static_cast<double>(ys.size()) / ctx.cost.cost(x, kTargetFidelity);
}

AcquisitionResult select_next_ehvi(const Context& ctx, const std::vector<Vector>& observed_front,
                                   const AcquisitionConfig& cfg) {
  cfg.validate();
  check_context(ctx);
  std::vector<std::pair<Vector, double>> outer;
  for (auto& x : sampling::quasi_random_candidates(ctx.objectives->space(), cfg.n_outer_candidates, cfg.design,
                                                   derive_seed(cfg.seed, 1))) {
    outer.emplace_back(std::move(x), kTargetFidelity);
  }
  auto res = argmax_over(ctx, outer, cfg, [&](const Vector& x, double) { return ehvi(ctx, observed_front, x, cfg); });
  res.baseline = front_hv(observed_front, ctx.reference);
  return res;
}

AcquisitionResult select_next(const Context& ctx, const AcquisitionConfig& cfg) {
  cfg.validate();
  return select_from(ctx, outer_candidates(ctx, cfg),
                     sampling::quasi_random_candidates(ctx.objectives->space(), cfg.n_inner_candidates, cfg.design,
                                                       derive_seed(cfg.seed, 2)),
                     cfg);
}

void write_table_csv(const AcquisitionResult& result, std::ostream& out) {
  if (result.table.empty()) return;
  const auto& first = result.table.front();
  const auto prec = out.precision(17);
  for (int j = 0; j < first.x.size(); ++j) out << "x" << j << ",";
  out << "s,value,cost,feasible";
  for (std::size_t q = 0; q < first.feasibility.size(); ++q) out << ",p" << q;
  out << "\n";
  for (const auto& c : result.table) {
    for (int j = 0; j < c.x.size(); ++j) out << c.x[j] << ",";
    out << c.s << ",";
    if (c.evaluated) {
      out << c.value;
    } else {
      out << "nan";
    }
    out << "," << c.cost << "," << (c.feasible ? 1 : 0);
    for (double p : c.feasibility) out << "," << p;
    out << "\n";
  }
  out.precision(prec);
}

}  // namespace rescue::acquisition
