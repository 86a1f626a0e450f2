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

#include "rescue/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rescue/errors.hpp"
#include "rescue/log.hpp"

namespace rescue::pareto {

bool dominates(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DomainError("dominates: length mismatch");
  bool strict = false;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

std::vector<int> pareto_indices(const std::vector<Vector>& points) {
  const int n = static_cast<int>(points.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Lexicographic sort puts every dominator before the points it dominates.
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    const auto& a = points[static_cast<std::size_t>(i)];
    const auto& b = points[static_cast<std::size_t>(j)];
    for (int k = 0; k < a.size(); ++k) {
      if (a[k] != b[k]) return a[k] < b[k];
    }
    return false;
  });
  std::vector<int> kept;
  for (int idx : order) {
    const auto& p = points[static_cast<std::size_t>(idx)];
    bool drop = false;
    for (int k : kept) {
      const auto& q = points[static_cast<std::size_t>(k)];
      if (dominates(q, p) || q == p) {
        drop = true;
        break;
      }
    }
    if (!drop) kept.push_back(idx);
  }
  return kept;
}

std::vector<Vector> pareto_filter(const std::vector<Vector>& points) {
  std::vector<Vector> out;
  for (int i : pareto_indices(points)) out.push_back(points[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

// Area dominated by 2-d points (already strictly inside the reference box).
double sweep_2d(std::vector<std::pair<double, double>> pts, double r0, double r1) {
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double ceiling = r1;
  for (const auto& [a, b] : pts) {
    if (b < ceiling) {
      area += (r0 - a) * (ceiling - b);
      ceiling = b;
    }
  }
  return area;
}

double exact_impl(const std::vector<Vector>& points, const Vector& ref, bool warn) {
  const int m = static_cast<int>(ref.size());
  if (m > 3) throw DomainError("hypervolume_exact: M > 3 unsupported; use hypervolume_mc");
  std::vector<Vector> inside;
  int clipped = 0;
  for (const auto& p : points) {
    if (p.size() != m) throw DomainError("hypervolume: point/reference length mismatch");
    if ((p.array() < ref.array()).all()) {
      inside.push_back(p);
    } else {
      ++clipped;
    }
  }
  if (clipped > 0 && warn) {
    std::ostringstream os;
    os << "hypervolume_exact: " << clipped << " point(s) do not dominate the reference; clipped";
    log::warn(os.str());
  }
  if (inside.empty()) return 0.0;
  if (m == 1) {
    double best = inside.front()[0];
    for (const auto& p : inside) best = std::min(best, p[0]);
    return ref[0] - best;
  }
  if (m == 2) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(inside.size());
    for (const auto& p : inside) pts.emplace_back(p[0], p[1]);
    return sweep_2d(std::move(pts), ref[0], ref[1]);
  }
  // M == 3: slice along the third objective; each slab is a 2-d sweep over
  // the points whose third coordinate lies below the slab.
  std::sort(inside.begin(), inside.end(), [](const Vector& a, const Vector& b) { return a[2] < b[2]; });
  double volume = 0.0;
  std::vector<std::pair<double, double>> active;
  for (std::size_t i = 0; i < inside.size(); ++i) {
    active.emplace_back(inside[i][0], inside[i][1]);
    const double top = (i + 1 < inside.size()) ? inside[i + 1][2] : ref[2];
    const double depth = top - inside[i][2];
    if (depth > 0.0) volume += depth * sweep_2d(active, ref[0], ref[1]);
  }
  return volume;
}

}  // namespace

double hypervolume_exact(const std::vector<Vector>& points, const Vector& reference) {
  return exact_impl(points, reference, true);
}

double hypervolume_exact(const ParetoFront& front) { return exact_impl(front.points, front.reference, true); }

double hypervolume(const std::vector<Vector>& points, const Vector& reference) {
  return exact_impl(points, reference, false);
}

McEstimate hypervolume_mc(const std::vector<Vector>& points, const Vector& reference, long n,
                          std::uint64_t seed) {
  if (n < 100) throw DomainError("hypervolume_mc: need n >= 100 samples");
  std::vector<Vector> inside;
  for (const auto& p : points) {
    if (p.size() != reference.size()) throw DomainError("hypervolume_mc: length mismatch");
    if ((p.array() < reference.array()).all()) inside.push_back(p);
  }
  if (inside.empty()) return {};
  Vector lo = inside.front();
  for (const auto& p : inside) lo = lo.cwiseMin(p);
  const Vector extent = reference - lo;
  const double box = extent.prod();
  if (!(box > 0.0)) return {};
  inside = pareto_filter(inside);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector sample(reference.size());
  long hits = 0;
  for (long k = 0; k < n; ++k) {
    for (int i = 0; i < sample.size(); ++i) sample[i] = lo[i] + extent[i] * u01(rng);
    for (const auto& p : inside) {
      if ((p.array() <= sample.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {box * p, box * std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

double log_hv_regret(double hv_star, double inferred_hv) {
  const double gap = hv_star - inferred_hv;
  if (gap < -1e-9) {
    std::ostringstream os;
    os << "log_hv_regret: inferred HV " << inferred_hv << " exceeds HV* " << hv_star << "; clamped";
    log::warn(os.str());
  }
  return std::log10(std::max(gap, kRegretFloor));
}

double area_under_regret(const std::vector<std::pair<double, double>>& curve) {
  if (curve.size() < 2) return 0.0;
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dc = curve[i].first - curve[i - 1].first;
    if (!(dc > 0.0)) throw DomainError("area_under_regret: costs must be strictly increasing");
    area += 0.5 * dc * (curve[i].second + curve[i - 1].second);
  }
  return area;
}

}  // namespace rescue::pareto
