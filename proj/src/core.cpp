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

#include "rescue/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rescue/errors.hpp"

namespace rescue {

std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix_seed(mix_seed(root) ^ (stream * 0xd1342543de82ef95ULL + 1));
}

// --------------------------------------------------------------------------

ConfigSpace::ConfigSpace(std::vector<Interval> bounds, std::vector<std::string> names)
    : bounds_(std::move(bounds)), names_(std::move(names)) {
  if (bounds_.empty()) throw DomainError("ConfigSpace: need at least one dimension");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (!(bounds_[i].lo < bounds_[i].hi)) {
      std::ostringstream os;
      os << "ConfigSpace: dimension " << i << " has lo >= hi";
      throw DomainError(os.str());
    }
  }
  if (names_.empty()) {
    for (std::size_t i = 0; i < bounds_.size(); ++i) names_.push_back("x" + std::to_string(i + 1));
  }
  if (names_.size() != bounds_.size()) throw DomainError("ConfigSpace: names/bounds length mismatch");
}

bool ConfigSpace::contains(const Vector& x, double tol) const {
  if (x.size() != dims()) return false;
  for (int i = 0; i < dims(); ++i) {
    const auto& b = bounds_[static_cast<std::size_t>(i)];
    const double slack = tol * b.width();
    if (!std::isfinite(x[i]) || x[i] < b.lo - slack || x[i] > b.hi + slack) return false;
  }
  return true;
}

void ConfigSpace::check(const Vector& x) const {
  if (x.size() != dims()) {
    throw DomainError("configuration has " + std::to_string(x.size()) + " components, expected " +
                      std::to_string(dims()));
  }
  if (!contains(x)) {
    for (int i = 0; i < dims(); ++i) {
      const auto& b = bounds_[static_cast<std::size_t>(i)];
      if (!std::isfinite(x[i]) || x[i] < b.lo - 1e-12 * b.width() || x[i] > b.hi + 1e-12 * b.width()) {
        std::ostringstream os;
        os << "configuration component " << names_[static_cast<std::size_t>(i)] << "=" << x[i]
           << " outside [" << b.lo << ", " << b.hi << "]";
        throw DomainError(os.str());
      }
    }
  }
}

Vector ConfigSpace::lower() const {
  Vector v(dims());
  for (int i = 0; i < dims(); ++i) v[i] = bounds_[static_cast<std::size_t>(i)].lo;
  return v;
}

Vector ConfigSpace::upper() const {
  Vector v(dims());
  for (int i = 0; i < dims(); ++i) v[i] = bounds_[static_cast<std::size_t>(i)].hi;
  return v;
}

Vector ConfigSpace::from_unit(const Vector& u) const {
  Vector x(dims());
  for (int i = 0; i < dims(); ++i) {
    const auto& b = bounds_[static_cast<std::size_t>(i)];
    x[i] = b.lo + u[i] * b.width();
  }
  return x;
}

// --------------------------------------------------------------------------

FidelitySpace FidelitySpace::discrete(std::vector<double> levels) {
  if (levels.empty()) throw DomainError("FidelitySpace: empty level list");
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  for (double s : levels) {
    if (!(s > 0.0 && s <= 1.0)) throw DomainError("FidelitySpace: levels must lie in (0,1]");
  }
  if (levels.back() != kTargetFidelity) throw DomainError("FidelitySpace: target fidelity 1.0 must be a level");
  FidelitySpace fs;
  fs.kind_ = Kind::kDiscrete;
  fs.levels_ = std::move(levels);
  return fs;
}

FidelitySpace FidelitySpace::continuous(double s_min) {
  if (!(s_min >= 0.0 && s_min < 1.0)) throw DomainError("FidelitySpace: continuous s_min must be in [0,1)");
  FidelitySpace fs;
  fs.kind_ = Kind::kContinuous;
  fs.levels_ = {s_min, kTargetFidelity};
  return fs;
}

bool FidelitySpace::contains(double s, double tol) const {
  if (!std::isfinite(s)) return false;
  if (kind_ == Kind::kContinuous) return s >= levels_.front() - tol && s <= kTargetFidelity + tol;
  return std::any_of(levels_.begin(), levels_.end(), [&](double l) { return std::abs(l - s) <= tol; });
}

std::vector<double> FidelitySpace::candidate_levels(int n_continuous) const {
  if (kind_ == Kind::kDiscrete) return levels_;
  std::vector<double> out;
  const double lo = levels_.front();
  const int n = std::max(n_continuous, 2);
  for (int i = 0; i < n; ++i) out.push_back(lo + (kTargetFidelity - lo) * i / (n - 1));
  out.back() = kTargetFidelity;
  return out;
}

// --------------------------------------------------------------------------

namespace {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace

double CostModel::cost(const Vector& x, double s) const {
  if (!std::isfinite(s)) throw DomainError("cost: non-finite fidelity");
  const double c = std::visit(
      Overloaded{
          [&](const Exponential& e) { return std::exp(e.rate * s); },
          [&](const Table& t) {
            for (const auto& [level, value] : t.cost_by_fidelity) {
              if (std::abs(level - s) <= 1e-9) return value;
            }
            throw DomainError("cost: fidelity " + std::to_string(s) + " not in cost table");
          },
          [&](const Custom& c) {
            if (!c.fn) throw ConfigError("cost: custom cost model without function");
            return c.fn(x, s);
          },
      },
      form_);
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("cost: model returned non-positive cost");
  return c;
}

double CostModel::min_cost(const FidelitySpace& space) const {
  const Vector dummy;
  if (space.is_discrete()) {
    double best = cost(dummy, space.levels().front());
    for (double s : space.levels()) best = std::min(best, cost(dummy, s));
    return best;
  }
  // Continuous: dense scan; exponential costs are monotone so this is exact at s_min.
  double best = cost(dummy, space.min());
  for (double s : space.candidate_levels(257)) best = std::min(best, cost(dummy, s));
  return best;
}

// --------------------------------------------------------------------------

void Dataset::append(Observation obs) {
  if (!(obs.cost > 0.0) || !std::isfinite(obs.cost)) throw DomainError("Dataset: observation cost must be positive");
  if (!obs.y.allFinite() || !obs.h.allFinite()) throw DomainError("Dataset: non-finite observation values");
  // Neumaier summation.
  const double t = sum_ + obs.cost;
  if (std::abs(sum_) >= std::abs(obs.cost)) {
    compensation_ += (sum_ - t) + obs.cost;
  } else {
    compensation_ += (obs.cost - t) + sum_;
  }
  sum_ = t;
  records_.push_back(std::move(obs));
}

void Dataset::clear() {
  records_.clear();
  sum_ = 0.0;
  compensation_ = 0.0;
}

Dataset Dataset::target_fidelity_subset(double tol) const {
  Dataset out;
  for (const auto& r : records_) {
    if (std::abs(r.s - kTargetFidelity) <= tol) out.append(r);
  }
  return out;
}

// --------------------------------------------------------------------------

double Constraint::violation(double h) const {
  if (satisfied(h)) return 0.0;
  return std::abs(h - threshold);
}

Evaluation Problem::evaluate(const Vector& x, double s, std::mt19937_64* noise) const {
  config_space_.check(x);
  if (!fidelity_space_.contains(s, 1e-9)) throw DomainError("evaluate: fidelity " + std::to_string(s) + " not in space");
  Evaluation e = evaluate_raw(x, s);
  if (noise != nullptr && noise_std_ > 0.0) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int m = 0; m < e.y.size(); ++m) e.y[m] += noise_std_ * n01(*noise);
    for (int q = 0; q < e.h.size(); ++q) e.h[q] += noise_std_ * n01(*noise);
  }
  for (int m = 0; m < e.y.size(); ++m) {
    if (static_cast<std::size_t>(m) < maximize_.size() && maximize_[static_cast<std::size_t>(m)]) e.y[m] = -e.y[m];
  }
  return e;
}

bool Problem::feasible(const Vector& h) const {
  for (int q = 0; q < num_constraints(); ++q) {
    if (!constraints_[static_cast<std::size_t>(q)].satisfied(h[q])) return false;
  }
  return true;
}

double Problem::total_violation(const Vector& h) const {
  double v = 0.0;
  for (int q = 0; q < num_constraints(); ++q) v += constraints_[static_cast<std::size_t>(q)].violation(h[q]);
  return v;
}

double Problem::sample_observational_fidelity(std::mt19937_64& rng) const {
  if (fidelity_space_.is_discrete()) {
    const auto& lv = fidelity_space_.levels();
    std::uniform_int_distribution<std::size_t> pick(0, lv.size() - 1);
    return lv[pick(rng)];
  }
  std::uniform_real_distribution<double> u(fidelity_space_.min(), kTargetFidelity);
  return u(rng);
}

// --------------------------------------------------------------------------

Vector normalize_config(const ConfigSpace& space, const Vector& x) {
  space.check(x);
  Vector u(space.dims());
  for (int i = 0; i < space.dims(); ++i) {
    const auto& b = space.bounds()[static_cast<std::size_t>(i)];
    u[i] = std::clamp((x[i] - b.lo) / b.width(), 0.0, 1.0);
  }
  return u;
}

Vector denormalize_config(const ConfigSpace& space, const Vector& u) {
  if (u.size() != space.dims()) throw DomainError("denormalize_config: length mismatch");
  return space.from_unit(u);
}

OutputStandardization standardize_outputs(const Dataset& ds) {
  if (ds.size() < 2) throw StateError("standardize_outputs: need at least two records");
  const int m_count = static_cast<int>(ds[0].y.size());
  const double n = ds.size();
  OutputStandardization out;
  out.means = Vector::Zero(m_count);
  out.stds = Vector::Zero(m_count);
  for (const auto& r : ds.records()) out.means += r.y;
  out.means /= n;
  for (const auto& r : ds.records()) out.stds += (r.y - out.means).cwiseAbs2();
  out.stds = (out.stds / n).cwiseSqrt().cwiseMax(1e-9);
  for (const auto& r : ds.records()) {
    Observation t = r;
    t.y = (r.y - out.means).cwiseQuotient(out.stds);
    out.transformed.append(std::move(t));
  }
  return out;
}

}  // namespace rescue
