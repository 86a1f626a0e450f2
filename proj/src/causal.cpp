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

#include "rescue/causal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "rescue/errors.hpp"
#include "rescue/log.hpp"

namespace rescue::causal {

// --------------------------------------------------------------------------
// Graph

CausalGraph::CausalGraph(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  std::set<std::string> seen;
  for (const auto& n : nodes_) {
    if (!seen.insert(n.name).second) throw DomainError("CausalGraph: duplicate node '" + n.name + "'");
  }
  adj_.assign(nodes_.size(), std::vector<char>(nodes_.size(), 0));
}

int CausalGraph::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (nodes_[static_cast<std::size_t>(i)].name == name) return i;
  }
  return -1;
}

bool CausalGraph::allowed(int from, int to) const {
  if (from == to) return false;
  const auto& a = nodes_[static_cast<std::size_t>(from)];
  const auto& b = nodes_[static_cast<std::size_t>(to)];
  return !b.exogenous && a.tier <= b.tier;
}

bool CausalGraph::has_edge(int from, int to) const {
  return adj_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] != 0;
}

bool CausalGraph::reachable(int from, int to) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<int> stack{from};
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    if (seen[static_cast<std::size_t>(u)]) continue;
    seen[static_cast<std::size_t>(u)] = 1;
    for (int v = 0; v < size(); ++v) {
      if (has_edge(u, v)) stack.push_back(v);
    }
  }
  return false;
}

void CausalGraph::add_edge(int from, int to) {
  if (from < 0 || to < 0 || from >= size() || to >= size()) throw DomainError("add_edge: node index out of range");
  if (!allowed(from, to)) {
    throw DomainError("add_edge: edge " + nodes_[static_cast<std::size_t>(from)].name + " -> " +
                      nodes_[static_cast<std::size_t>(to)].name + " violates the tier constraints");
  }
  if (reachable(to, from)) throw DomainError("add_edge: edge would create a cycle");
  adj_[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] = 1;
}

std::vector<int> CausalGraph::parents(int node) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (has_edge(i, node)) out.push_back(i);
  }
  return out;
}

std::vector<std::pair<int, int>> CausalGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) {
      if (has_edge(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<int> CausalGraph::topological_order() const {
  std::vector<int> indegree(nodes_.size(), 0);
  for (const auto& [a, b] : edges()) ++indegree[static_cast<std::size_t>(b)];
  std::set<int> ready;
  for (int i = 0; i < size(); ++i) {
    if (indegree[static_cast<std::size_t>(i)] == 0) ready.insert(i);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    const int u = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(u);
    for (int v = 0; v < size(); ++v) {
      if (has_edge(u, v) && --indegree[static_cast<std::size_t>(v)] == 0) ready.insert(v);
    }
  }
  if (static_cast<int>(order.size()) != size()) throw StateError("topological_order: graph has a cycle");
  return order;
}

bool CausalGraph::is_acyclic() const {
  try {
    topological_order();
    return true;
  } catch (const StateError&) {
    return false;
  }
}

bool CausalGraph::respects_tiers() const {
  for (const auto& [a, b] : edges()) {
    if (!allowed(a, b)) return false;
  }
  return true;
}

nlohmann::json CausalGraph::to_json() const {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nlohmann::json node{{"name", n.name}, {"tier", n.tier}};
    if (n.exogenous) node["exogenous"] = true;
    j["nodes"].push_back(node);
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : edges()) {
    j["edges"].push_back({nodes_[static_cast<std::size_t>(a)].name, nodes_[static_cast<std::size_t>(b)].name});
  }
  return j;
}

CausalGraph CausalGraph::from_json(const nlohmann::json& j) {
  try {
    std::vector<Node> nodes;
    for (const auto& n : j.at("nodes")) {
      nodes.push_back(Node{n.at("name").get<std::string>(), n.value("tier", 0), n.value("exogenous", false)});
    }
    CausalGraph g(std::move(nodes));
    auto resolve = [&g](const nlohmann::json& v) {
      const int idx = v.is_number_integer() ? v.get<int>() : g.index_of(v.get<std::string>());
      if (idx < 0 || idx >= g.size()) throw ConfigError("graph JSON: unknown node " + v.dump());
      return idx;
    };
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ConfigError("graph JSON: edges must be [from, to] pairs");
      g.add_edge(resolve(e[0]), resolve(e[1]));
    }
    return g;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("graph JSON: ") + ex.what());
  } catch (const DomainError& ex) {
    throw ConfigError(std::string("graph JSON: ") + ex.what());
  }
}

// --------------------------------------------------------------------------
// Data

int ObservationalDataset::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DomainError("observational data has no column '" + name + "'");
  return static_cast<int>(it - names.begin());
}

ObservationalDataset ObservationalDataset::concat(const ObservationalDataset& other) const {
  if (other.names != names) throw DomainError("concat: column names differ");
  ObservationalDataset out{names, Matrix(rows() + other.rows(), cols())};
  if (rows() > 0) out.data.topRows(rows()) = data;
  if (other.rows() > 0) out.data.bottomRows(other.rows()) = other.data;
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ObservationalDataset ObservationalDataset::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV: missing header");
  ObservationalDataset out;
  out.names = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != out.names.size()) {
      throw ConfigError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(out.names.size()) +
                        " values");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty() || !std::isfinite(v)) {
        throw ConfigError("CSV line " + std::to_string(line_no) + ": bad value '" + c + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  out.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < out.names.size(); ++j) {
      out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

ObservationalDataset ObservationalDataset::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return read_csv(in);
}

void ObservationalDataset::write_csv(std::ostream& out) const {
  for (int j = 0; j < cols(); ++j) out << (j ? "," : "") << names[static_cast<std::size_t>(j)];
  out << '\n';
  out.precision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < cols(); ++j) out << (j ? "," : "") << data(i, j);
    out << '\n';
  }
}

// --------------------------------------------------------------------------
// Conditional independence

namespace {

struct CorrelationSummary {
  Matrix corr;
  std::vector<char> constant;
};

CorrelationSummary correlation(const Matrix& data) {
  const Eigen::Index n = data.rows();
  const Vector mean = data.colwise().mean().transpose();
  Matrix centered = data.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n);
  CorrelationSummary out;
  out.constant.assign(static_cast<std::size_t>(data.cols()), 0);
  Vector sd(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    sd[j] = std::sqrt(std::max(cov(j, j), 0.0));
    if (sd[j] <= 1e-12 * std::max(1.0, std::abs(mean[j]))) out.constant[static_cast<std::size_t>(j)] = 1;
  }
  out.corr = Matrix::Identity(data.cols(), data.cols());
  for (Eigen::Index a = 0; a < data.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < data.cols(); ++b) {
      if (out.constant[static_cast<std::size_t>(a)] || out.constant[static_cast<std::size_t>(b)]) continue;
      const double r = std::clamp(cov(a, b) / (sd[a] * sd[b]), -1.0, 1.0);
      out.corr(a, b) = out.corr(b, a) = r;
    }
  }
  return out;
}

}  // namespace

CiResult fisher_z_from_correlation(const Matrix& corr, const std::vector<char>& constant_column, int n, int a,
                                   int b, const std::vector<int>& cond, double alpha) {
  CiResult res;
  if (constant_column[static_cast<std::size_t>(a)] || constant_column[static_cast<std::size_t>(b)]) {
    res.independent = true;
    return res;
  }
  std::vector<int> idx{a, b};
  for (int c : cond) {
    if (!constant_column[static_cast<std::size_t>(c)]) idx.push_back(c);
  }
  const int k = static_cast<int>(cond.size());
  const int dof = n - k - 3;
  if (dof <= 0) throw DomainError("fisher_z_test: need n > |cond| + 3");

  const int p = static_cast<int>(idx.size());
  Matrix sub(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      sub(i, j) = corr(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
  }
  // A tested variable that is an exact linear function of the conditioning set
  // carries no information about the pair; such a test never separates it.
  if (p > 2) {
    const Matrix cc = sub.bottomRightCorner(p - 2, p - 2);
    const auto cc_ldlt = (cc + 1e-12 * Matrix::Identity(p - 2, p - 2)).ldlt();
    for (int i = 0; i < 2; ++i) {
      const Vector v = sub.block(2, i, p - 2, 1);
      if (1.0 - v.dot(cc_ldlt.solve(v)) < 1e-9) {
        res.p_value = 0.0;
        res.partial_correlation = 1.0;
        res.statistic = std::numeric_limits<double>::infinity();
        res.independent = false;
        return res;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sub, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < 1e-12) {
    log::warn("fisher_z_test: singular correlation submatrix, adding ridge 1e-8");
    sub.diagonal().array() += 1e-8;
  }
  const Matrix prec = sub.ldlt().solve(Matrix::Identity(p, p));
  double r = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
  if (!std::isfinite(r)) throw NumericalError("fisher_z_test: non-finite partial correlation");
  r = std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15);
  res.partial_correlation = r;
  res.statistic = std::sqrt(static_cast<double>(dof)) * std::atanh(r);
  res.p_value = std::erfc(std::abs(res.statistic) / std::sqrt(2.0));
  res.independent = res.p_value > alpha;
  return res;
}

CiResult fisher_z_test(const ObservationalDataset& data, int a, int b, const std::vector<int>& cond, double alpha) {
  const auto s = correlation(data.data);
  return fisher_z_from_correlation(s.corr, s.constant, data.rows(), a, b, cond, alpha);
}

// --------------------------------------------------------------------------
// PC

namespace {

// Calls fn on every size-k subset of items (lexicographic); stops when fn returns true.
template <typename Fn>
bool for_each_subset(const std::vector<int>& items, int k, Fn&& fn) {
  const int n = static_cast<int>(items.size());
  if (k > n) return false;
  std::vector<int> pick(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::vector<int> subset;
    for (int i : pick) subset.push_back(items[static_cast<std::size_t>(i)]);
    if (fn(subset)) return true;
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return false;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace

CausalGraph pc_discover(const ObservationalDataset& data, const std::vector<Node>& nodes, const PcOptions& options) {
  const int v = static_cast<int>(nodes.size());
  if (data.cols() != v) throw DomainError("pc_discover: one node per data column required");
  for (int i = 0; i < v; ++i) {
    if (data.names[static_cast<std::size_t>(i)] != nodes[static_cast<std::size_t>(i)].name) {
      throw DomainError("pc_discover: node '" + nodes[static_cast<std::size_t>(i)].name + "' does not match column '" +
                        data.names[static_cast<std::size_t>(i)] + "'");
    }
  }
  if (data.rows() < 4 + v) throw StateError("pc_discover: need at least 4 + |V| rows");

  CausalGraph g(nodes);
  const auto summary = correlation(data.data);
  const int n = data.rows();

  // Skeleton. Pairs with no admissible orientation never enter.
  std::vector<std::vector<char>> adj(static_cast<std::size_t>(v), std::vector<char>(static_cast<std::size_t>(v), 0));
  for (int i = 0; i < v; ++i) {
    for (int j = 0; j < v; ++j) {
      if (i != j && (g.allowed(i, j) || g.allowed(j, i))) adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
    }
  }
  std::map<std::pair<int, int>, std::vector<int>> sepset;
  auto neighbours = [&](const std::vector<std::vector<char>>& a, int x) {
    std::vector<int> out;
    for (int y = 0; y < v; ++y) {
      if (a[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]) out.push_back(y);
    }
    return out;
  };

  for (int level = 0; level <= options.max_condition_size; ++level) {
    const auto snapshot = adj;
    bool any_testable = false;
    for (int i = 0; i < v; ++i) {
      for (int j = i + 1; j < v; ++j) {
        if (!adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
        for (const auto& [x, y] : {std::pair{i, j}, std::pair{j, i}}) {
          auto nb = neighbours(snapshot, x);
          nb.erase(std::remove(nb.begin(), nb.end(), y), nb.end());
          if (static_cast<int>(nb.size()) < level) continue;
          if (n - level - 3 <= 0) continue;
          any_testable = true;
          const bool removed = for_each_subset(nb, level, [&](const std::vector<int>& s) {
            const auto r = fisher_z_from_correlation(summary.corr, summary.constant, n, i, j, s, options.alpha);
            if (!r.independent) return false;
            adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0;
            adj[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 0;
            sepset[{i, j}] = s;
            return true;
          });
          if (removed) break;
        }
      }
    }
    if (!any_testable) break;
  }

  // Orientation. dir[a][b] = 1 marks a -> b; an adjacent pair with neither
  // mark is undirected.
  std::vector<std::vector<char>> dir(static_cast<std::size_t>(v), std::vector<char>(static_cast<std::size_t>(v), 0));
  auto is_adj = [&](int a, int b) { return adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] != 0; };
  auto directed = [&](int a, int b) { return dir[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] != 0; };
  auto undirected = [&](int a, int b) { return is_adj(a, b) && !directed(a, b) && !directed(b, a); };
  std::vector<std::pair<int, int>> forced, inferred;
  for (int a = 0; a < v; ++a) {
    for (int b = 0; b < v; ++b) {
      if (is_adj(a, b) && g.allowed(a, b) && !g.allowed(b, a)) {
        dir[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
        forced.emplace_back(a, b);
      }
    }
  }
  auto orient = [&](int a, int b) {
    if (!undirected(a, b) || !g.allowed(a, b)) return false;
    dir[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
    inferred.emplace_back(a, b);
    return true;
  };
  // Unshielded colliders a -> k <- b with k outside sepset(a, b).
  for (int k = 0; k < v; ++k) {
    for (int a = 0; a < v; ++a) {
      for (int b = a + 1; b < v; ++b) {
        if (!is_adj(a, k) || !is_adj(b, k) || is_adj(a, b)) continue;
        const auto it = sepset.find({a, b});
        const bool separated_by_k = it != sepset.end() && std::count(it->second.begin(), it->second.end(), k) > 0;
        if (separated_by_k) continue;
        if (directed(k, a) || directed(k, b)) continue;
        if (!g.allowed(a, k) || !g.allowed(b, k)) continue;
        orient(a, k);
        orient(b, k);
      }
    }
  }
  // Meek rules 1 and 2.
  for (bool changed = true; changed;) {
    changed = false;
    for (int a = 0; a < v; ++a) {
      for (int b = 0; b < v; ++b) {
        if (!directed(a, b)) continue;
        for (int c = 0; c < v; ++c) {
          if (c != a && undirected(b, c) && !is_adj(a, c)) changed = orient(b, c) || changed;
        }
      }
    }
    for (int a = 0; a < v; ++a) {
      for (int c = 0; c < v; ++c) {
        if (!undirected(a, c)) continue;
        for (int b = 0; b < v; ++b) {
          if (directed(a, b) && directed(b, c)) {
            changed = orient(a, c) || changed;
            break;
          }
        }
      }
    }
  }

  // Assemble: forced edges go up the tiers and cannot close a cycle; inferred
  // and remaining undirected edges are inserted in turn and reversed when they
  // would.
  for (const auto& [a, b] : forced) g.add_edge(a, b);
  auto insert = [&g](int a, int b) {
    if (g.reachable(b, a)) {
      g.add_edge(b, a);
    } else {
      g.add_edge(a, b);
    }
  };
  for (const auto& [a, b] : inferred) insert(a, b);
  for (int a = 0; a < v; ++a) {
    for (int b = a + 1; b < v; ++b) {
      if (undirected(a, b)) insert(a, b);
    }
  }
  if (!g.is_acyclic() || !g.respects_tiers()) throw StateError("pc_discover: produced an invalid graph");
  return g;
}

// --------------------------------------------------------------------------
// SCM

LinearGaussianScm::LinearGaussianScm(CausalGraph graph, std::vector<Mechanism> mechanisms)
    : graph_(std::move(graph)), mechanisms_(std::move(mechanisms)) {
  if (static_cast<int>(mechanisms_.size()) != graph_.size()) throw DomainError("LinearGaussianScm: one mechanism per node");
  for (int i = 0; i < graph_.size(); ++i) {
    const auto& m = mechanisms_[static_cast<std::size_t>(i)];
    if (m.parents != graph_.parents(i)) throw DomainError("LinearGaussianScm: mechanism parents differ from the graph");
    if (m.weights.size() != static_cast<Eigen::Index>(m.parents.size())) throw DomainError("LinearGaussianScm: weight count");
    if (!(m.residual_variance >= 0.0)) throw DomainError("LinearGaussianScm: negative residual variance");
  }
  order_ = graph_.topological_order();
}

Matrix LinearGaussianScm::sample(const std::vector<std::optional<double>>& clamp, int n_mc, std::uint64_t seed) const {
  if (n_mc < 1) throw DomainError("sample: n_mc must be >= 1");
  if (static_cast<int>(clamp.size()) != size()) throw DomainError("sample: one clamp slot per node");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  // Noise is drawn for every node in index order so clamping does not shift
  // the streams of the others.
  Matrix noise(n_mc, size());
  for (int j = 0; j < size(); ++j) {
    for (int i = 0; i < n_mc; ++i) noise(i, j) = n01(rng);
  }
  Matrix values(n_mc, size());
  for (int node : order_) {
    const auto& m = mechanisms_[static_cast<std::size_t>(node)];
    if (clamp[static_cast<std::size_t>(node)]) {
      values.col(node).setConstant(*clamp[static_cast<std::size_t>(node)]);
      continue;
    }
    Vector col = Vector::Constant(n_mc, m.intercept);
    for (std::size_t p = 0; p < m.parents.size(); ++p) {
      col += m.weights[static_cast<Eigen::Index>(p)] * values.col(m.parents[p]);
    }
    if (m.residual_variance > 0.0) col += std::sqrt(m.residual_variance) * noise.col(node);
    values.col(node) = col;
  }
  return values;
}

LinearGaussianScm fit_scm(const CausalGraph& graph, const ObservationalDataset& data) {
  if (!graph.is_acyclic()) throw DomainError("fit_scm: graph has a cycle");
  if (data.rows() < 1) throw StateError("fit_scm: no data");
  const double n = data.rows();
  std::vector<int> col(static_cast<std::size_t>(graph.size()));
  for (int i = 0; i < graph.size(); ++i) col[static_cast<std::size_t>(i)] = data.column(graph.nodes()[static_cast<std::size_t>(i)].name);

  std::vector<Mechanism> mechs(static_cast<std::size_t>(graph.size()));
  for (int i = 0; i < graph.size(); ++i) {
    Mechanism& m = mechs[static_cast<std::size_t>(i)];
    m.parents = graph.parents(i);
    const Vector y = data.data.col(col[static_cast<std::size_t>(i)]);
    const double ybar = y.mean();
    const int p = static_cast<int>(m.parents.size());
    if (p == 0) {
      m.weights = Vector(0);
      m.intercept = ybar;
      m.residual_variance = (y.array() - ybar).square().sum() / n;
      continue;
    }
    Matrix x(data.rows(), p);
    for (int k = 0; k < p; ++k) x.col(k) = data.data.col(col[static_cast<std::size_t>(m.parents[static_cast<std::size_t>(k)])]);
    const Vector xbar = x.colwise().mean().transpose();
    const Matrix xc = x.rowwise() - xbar.transpose();
    const Vector yc = y.array() - ybar;
    Eigen::ColPivHouseholderQR<Matrix> qr(xc);
    if (qr.rank() < p) {
      Matrix gram = xc.transpose() * xc;
      gram.diagonal().array() += 1e-8;
      m.weights = gram.ldlt().solve(xc.transpose() * yc);
    } else {
      m.weights = qr.solve(yc);
    }
    m.intercept = ybar - m.weights.dot(xbar);
    const Vector resid = yc - xc * m.weights;
    m.residual_variance = resid.squaredNorm() / n;
  }
  return LinearGaussianScm(graph, std::move(mechs));
}

DoEstimate do_sample_moments(const LinearGaussianScm& scm, const std::vector<std::optional<double>>& clamp, int n_mc,
                             std::uint64_t seed) {
  if (n_mc < 2) throw DomainError("do_estimate: n_mc must be >= 2");
  const Matrix s = scm.sample(clamp, n_mc, seed);
  DoEstimate out;
  out.n_mc = n_mc;
  out.mean = s.colwise().mean().transpose();
  out.std = ((s.rowwise() - out.mean.transpose()).array().square().colwise().sum() / (n_mc - 1)).sqrt().transpose();
  return out;
}

// --------------------------------------------------------------------------
// Problem plumbing

std::vector<Node> problem_nodes(const Problem& problem) {
  std::vector<Node> nodes;
  const auto& names = problem.config_space().names();
  for (int i = 0; i < problem.config_space().dims(); ++i) {
    const std::string name = static_cast<std::size_t>(i) < names.size() ? names[static_cast<std::size_t>(i)]
                                                                           : "x" + std::to_string(i + 1);
    nodes.push_back(Node{name, kTierOption, false});
  }
  nodes.push_back(Node{"s", kTierOption, true});
  for (const auto& z : problem.indicator_names()) nodes.push_back(Node{z, kTierIndicator, false});
  for (const auto& y : problem.objective_names()) nodes.push_back(Node{y, kTierOutcome, false});
  for (const auto& c : problem.constraints()) nodes.push_back(Node{c.name, kTierOutcome, false});
  return nodes;
}

namespace {

VariableMap map_by_name(const Problem& problem, const std::vector<Node>& layout, const CausalGraph& graph) {
  VariableMap map;
  auto find = [&graph](const std::string& name) {
    const int idx = graph.index_of(name);
    if (idx < 0) throw ConfigError("causal graph has no node '" + name + "'");
    return idx;
  };
  const int d = problem.config_space().dims();
  const int zc = static_cast<int>(problem.indicator_names().size());
  const int m = problem.num_objectives();
  for (int i = 0; i < d; ++i) map.options.push_back(find(layout[static_cast<std::size_t>(i)].name));
  map.fidelity = graph.index_of("s");
  for (int i = 0; i < zc; ++i) map.indicators.push_back(find(layout[static_cast<std::size_t>(d + 1 + i)].name));
  for (int i = 0; i < m; ++i) map.objectives.push_back(find(layout[static_cast<std::size_t>(d + 1 + zc + i)].name));
  for (int i = 0; i < problem.num_constraints(); ++i) {
    map.constraints.push_back(find(layout[static_cast<std::size_t>(d + 1 + zc + m + i)].name));
  }
  return map;
}

}  // namespace

VariableMap problem_variable_map(const Problem& problem) {
  const auto nodes = problem_nodes(problem);
  return map_by_name(problem, nodes, CausalGraph(nodes));
}

namespace {

Vector row_of(const Vector& x, double s, const Vector& z, const Vector& y, const Vector& h) {
  Vector r(x.size() + 1 + z.size() + y.size() + h.size());
  r << x, s, z, y, h;
  return r;
}

std::vector<std::string> node_names(const std::vector<Node>& nodes) {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.name);
  return out;
}

}  // namespace

ObservationalDataset observational_from_problem(const Problem& problem, int n, std::uint64_t seed) {
  const auto nodes = problem_nodes(problem);
  ObservationalDataset out{node_names(nodes), Matrix(n, static_cast<Eigen::Index>(nodes.size()))};
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::mt19937_64 noise(derive_seed(seed, 1));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto& space = problem.config_space();
  for (int i = 0; i < n; ++i) {
    Vector unit(space.dims());
    for (int j = 0; j < space.dims(); ++j) unit[j] = u01(rng);
    const Vector x = space.from_unit(unit);
    const double s = problem.sample_observational_fidelity(rng);
    const Evaluation e = problem.evaluate(x, s, &noise);
    const Vector r = row_of(x, s, e.z, e.y, e.h);
    if (r.size() != out.cols()) throw StateError("observational_from_problem: output sizes do not match the nodes");
    out.data.row(i) = r.transpose();
  }
  return out;
}

ObservationalDataset rows_from_dataset(const Problem& problem, const Dataset& ds) {
  const auto nodes = problem_nodes(problem);
  ObservationalDataset out{node_names(nodes), Matrix(ds.size(), static_cast<Eigen::Index>(nodes.size()))};
  for (int i = 0; i < ds.size(); ++i) {
    const auto& o = ds[i];
    const Vector r = row_of(o.x, o.s, o.z, o.y, o.h);
    if (r.size() != out.cols()) throw StateError("rows_from_dataset: record sizes do not match the nodes");
    out.data.row(i) = r.transpose();
  }
  return out;
}

// --------------------------------------------------------------------------
// Causal model

CausalModel CausalModel::agnostic(int num_objectives, int num_constraints) {
  CausalModel m;
  m.num_objectives_ = num_objectives;
  m.num_constraints_ = num_constraints;
  return m;
}

CausalModel::CausalModel(LinearGaussianScm scm, VariableMap map, ConfigSpace space, CausalModelOptions options)
    : agnostic_(false),
      num_objectives_(static_cast<int>(map.objectives.size())),
      num_constraints_(static_cast<int>(map.constraints.size())),
      scm_(std::move(scm)),
      map_(std::move(map)),
      space_(std::move(space)),
      options_(options) {
  if (static_cast<int>(map_.options.size()) != space_.dims()) throw DomainError("CausalModel: option count mismatch");
  if (options_.n_mc < 2) throw DomainError("CausalModel: n_mc must be >= 2");
}

std::pair<DoEstimate, DoEstimate> CausalModel::estimate(const Vector& x, double s) const {
  if (agnostic_) {
    return {DoEstimate{Vector::Zero(num_objectives_), Vector::Zero(num_objectives_), 0},
            DoEstimate{Vector::Zero(num_constraints_), Vector::Zero(num_constraints_), 0}};
  }
  space_.check(x);
  if (!std::isfinite(s)) throw DomainError("do_estimate: non-finite fidelity");
  std::vector<std::optional<double>> clamp(static_cast<std::size_t>(scm_.size()));
  for (std::size_t i = 0; i < map_.options.size(); ++i) {
    clamp[static_cast<std::size_t>(map_.options[i])] = x[static_cast<Eigen::Index>(i)];
  }
  if (map_.fidelity >= 0) clamp[static_cast<std::size_t>(map_.fidelity)] = s;
  const DoEstimate all = do_sample_moments(scm_, clamp, options_.n_mc, options_.seed);
  auto pick = [&all](const std::vector<int>& idx) {
    DoEstimate e{Vector(static_cast<Eigen::Index>(idx.size())), Vector(static_cast<Eigen::Index>(idx.size())), all.n_mc};
    for (std::size_t k = 0; k < idx.size(); ++k) {
      e.mean[static_cast<Eigen::Index>(k)] = all.mean[idx[k]];
      e.std[static_cast<Eigen::Index>(k)] = all.std[idx[k]];
    }
    return e;
  };
  return {pick(map_.objectives), pick(map_.constraints)};
}

DoEstimate CausalModel::objectives(const Vector& x, double s) const { return estimate(x, s).first; }
DoEstimate CausalModel::constraints(const Vector& x, double s) const { return estimate(x, s).second; }

CausalModel causal_model_from_graph(const Problem& problem, const CausalGraph& graph, const ObservationalDataset& data,
                                    const CausalModelOptions& options) {
  auto scm = fit_scm(graph, data);
  auto map = map_by_name(problem, problem_nodes(problem), graph);
  return CausalModel(std::move(scm), std::move(map), problem.config_space(), options);
}

CausalModel learn_causal_model(const Problem& problem, const ObservationalDataset& data, const PcOptions& pc,
                               const CausalModelOptions& options) {
  const auto graph = pc_discover(data, problem_nodes(problem), pc);
  return causal_model_from_graph(problem, graph, data, options);
}

bool cpm_update_due(int t, int cycle) {
  if (cycle < 1) throw DomainError("cpm_update_due: cycle must be >= 1");
  return t > 0 && t % cycle == 0;
}

CausalModel update_cpm(const Problem& problem, const ObservationalDataset& observational, const Dataset& interventional,
                       const PcOptions& pc, const CausalModelOptions& options) {
  const auto combined = observational.concat(rows_from_dataset(problem, interventional));
  return learn_causal_model(problem, combined, pc, options);
}

}  // namespace rescue::causal
