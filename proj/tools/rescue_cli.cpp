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

// Command-line front end: run, ablate, discover, hv, theory, bias.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 numerical
// abort.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rescue/causal.hpp"
#include "rescue/errors.hpp"
#include "rescue/log.hpp"
#include "rescue/pareto.hpp"
#include "rescue/runner.hpp"
#include "rescue/theory.hpp"

namespace {

using namespace rescue;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t\r"));
    item.erase(item.find_last_not_of(" \t\r") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
}

std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_number(item, what));
  return out;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw Error("cannot write " + path);
}

// Options shared by the commands that build a run configuration.
struct RunOverrides {
  std::string config;
  long long seed = -1;
  std::string out;
  std::string problem;
  double delta_scale = -1.0;
  double budget = -1.0;
  int max_iterations = -1;

  void attach(CLI::App* cmd, bool with_seed = true) {
    cmd->add_option("--config", config, "JSON configuration file");
    if (with_seed) cmd->add_option("--seed", seed, "Root seed");
    cmd->add_option("--problem", problem, "healthcare | branin-currin | park | adversarial");
    cmd->add_option("--delta-scale", delta_scale, "Bias magnitude of the adversarial problem");
    cmd->add_option("--budget", budget, "Total budget");
    cmd->add_option("--max-iterations", max_iterations, "Iteration cap (0 = none)");
  }

  runner::RunConfig build() const {
    runner::RunConfig c = config.empty() ? runner::RunConfig{} : runner::RunConfig::from_file(config);
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    if (!problem.empty()) c.problem = problem;
    if (delta_scale >= 0.0) c.problem_options.delta_scale = delta_scale;
    if (budget > 0.0) c.budget = budget;
    if (max_iterations >= 0) c.max_iterations = max_iterations;
    if (!out.empty()) c.out_dir = out;
    c.validate();
    return c;
  }
};

std::vector<runner::Method> parse_methods(const std::string& s) {
  std::vector<runner::Method> out;
  for (const auto& name : split(s, ',')) out.push_back(runner::parse_method(name));
  if (out.empty()) throw ConfigError("--methods: at least one method required");
  return out;
}

std::vector<std::uint64_t> seed_range(int k) {
  if (k < 1) throw ConfigError("--seeds must be >= 1");
  std::vector<std::uint64_t> out;
  for (int i = 0; i < k; ++i) out.push_back(static_cast<std::uint64_t>(i));
  return out;
}

// ----------------------------------------------------------------------------

int cmd_run(const RunOverrides& o, bool dump_acquisition) {
  auto c = o.build();
  if (dump_acquisition) c.keep_acquisition_tables = true;
  if (c.out_dir.empty()) c.out_dir = "results/" + runner::method_name(c.method) + "_seed" + std::to_string(c.seed);
  const auto lg = runner::run(c);
  std::printf("method %s seed %llu: %d iterations, cost %.4g, AUR %.6g, final log regret %.4f -> %s\n",
              runner::method_name(c.method).c_str(), static_cast<unsigned long long>(c.seed), lg.iterations,
              lg.total_cost(), lg.aur, lg.final_log_regret, c.out_dir.c_str());
  return 0;
}

int cmd_ablate(const RunOverrides& o, const std::string& methods, int seeds) {
  const auto c = o.build();
  const auto res = runner::run_method_ablation(c, parse_methods(methods), seed_range(seeds));
  std::printf("%-22s %6s %12s %12s %10s %10s\n", "method", "runs", "median_aur", "median_logr", "median_it",
              "violation");
  for (const auto& s : res.summary) {
    std::printf("%-22s %6d %12.6g %12.4f %10.1f %10.3f\n", s.method.c_str(), s.runs, s.median_aur,
                s.median_final_log_regret, s.median_iterations, s.violation_rate);
  }
  for (const auto& p : res.paired) {
    std::printf("%s vs %s: gain %.2f%%, wins %d/%zu, t %.3f, p %.4g, d %.3f\n", p.method.c_str(), p.baseline.c_str(),
                p.gain_percent, p.wins, res.seeds.size(), p.t_statistic, p.p_value, p.cohen_d);
  }
  if (!c.out_dir.empty()) write_json(res.to_json(), (std::filesystem::path(c.out_dir) / "ablation.json").string());
  return 0;
}

std::vector<causal::Node> nodes_for(const causal::ObservationalDataset& data, const std::string& problem,
                                    const std::string& tiers) {
  if (!problem.empty()) return causal::problem_nodes(*benchmarks::make_problem(problem));
  std::vector<causal::Node> nodes;
  for (const auto& name : data.names) nodes.push_back(causal::Node{name, 0, name == "s"});
  for (const auto& item : split(tiers, ',')) {
    const auto kv = split(item, ':');
    if (kv.size() != 2) throw ConfigError("--tiers expects name:tier pairs");
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const causal::Node& n) { return n.name == kv[0]; });
    if (it == nodes.end()) throw ConfigError("--tiers: no column '" + kv[0] + "'");
    it->tier = static_cast<int>(parse_number(kv[1], "--tiers"));
  }
  return nodes;
}

int cmd_discover(const std::string& data_path, const std::string& out, const std::string& problem,
                 const std::string& tiers, double alpha, int max_cond) {
  causal::ObservationalDataset data;
  try {
    data = causal::ObservationalDataset::read_csv_file(data_path);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const auto g = causal::pc_discover(data, nodes_for(data, problem, tiers), {alpha, max_cond});
  write_json(g.to_json(), out);
  if (!out.empty()) std::printf("%zu nodes, %zu edges -> %s\n", data.names.size(), g.edges().size(), out.c_str());
  return 0;
}

int cmd_hv(const std::string& path, const std::string& ref_text, long mc_samples, std::uint64_t seed) {
  const auto ref = parse_numbers(ref_text, "--ref");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<Vector> points;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = split(line, ',');
    if (cells.empty()) continue;
    Vector p(static_cast<Eigen::Index>(cells.size()));
    bool numeric = true;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      try {
        p[static_cast<Eigen::Index>(j)] = parse_number(cells[j], "point");
      } catch (const ConfigError&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (line_no == 1) continue;  // header
      throw ConfigError(path + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (p.size() != static_cast<Eigen::Index>(ref.size())) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": point dimension differs from --ref");
    }
    points.push_back(p);
  }
  if (points.empty()) throw ConfigError(path + ": no points");
  const Vector r = Eigen::Map<const Vector>(ref.data(), static_cast<Eigen::Index>(ref.size()));
  json j{{"points", points.size()}, {"pareto_points", pareto::pareto_filter(points).size()}};
  if (r.size() <= 3) j["exact"] = pareto::hypervolume_exact(points, r);
  if (mc_samples > 0 || r.size() > 3) {
    const auto mc = pareto::hypervolume_mc(points, r, mc_samples > 0 ? mc_samples : 100000, seed);
    j["mc"] = mc.estimate;
    j["mc_std_error"] = mc.std_error;
  }
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_theory(const RunOverrides& o, const std::string& out, int perturbations) {
  auto c = o.build();
  c.out_dir.clear();
  theory::TheoryOptions opt;
  if (perturbations > 0) opt.lipschitz_perturbations = perturbations;
  const auto res = theory::run_theory(c, opt);
  write_json(res.to_json(), out);
  if (!out.empty()) {
    std::printf("L_hat %.4g xi_hat %.4g: bound %s (%zu iterations) -> %s\n", res.report.constants.L_hat,
                res.report.constants.xi_hat, res.report.pass() ? "holds" : "violated", res.report.rows.size(),
                out.c_str());
  }
  return 0;
}

int cmd_bias(const RunOverrides& o, const std::string& deltas, int seeds, const std::string& out) {
  const auto c = o.build();
  const auto res = theory::bias_robustness_experiment(c, parse_numbers(deltas, "--deltas"), seed_range(seeds));
  for (const auto& [m, ratio] : res.regret_ratio) std::printf("%-22s regret ratio %.4g\n", m.c_str(), ratio);
  write_json(res.to_json(), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity multi-objective Bayesian optimization with causal priors"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "debug | info | warn | silent");

  RunOverrides run_o, ablate_o, theory_o, bias_o;
  bool dump_acquisition = false;
  auto* run_cmd = app.add_subcommand("run", "Run one optimization");
  run_o.attach(run_cmd);
  run_cmd->add_option("--out", run_o.out, "Output directory");
  run_cmd->add_flag("--dump-acquisition", dump_acquisition, "Write every acquisition table");

  std::string methods = "rescue,hvkg_noncausal,ehvi";
  int seeds = 10;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare methods over seeds 0..K-1");
  ablate_o.attach(ablate_cmd, false);
  ablate_cmd->add_option("--methods", methods, "Comma-separated methods; the first is compared with the rest");
  ablate_cmd->add_option("--seeds", seeds, "Number of seeds");
  ablate_cmd->add_option("--out", ablate_o.out, "Output directory");

  std::string data_path, dag_out, discover_problem, tiers;
  double alpha = 0.05;
  int max_cond = 4;
  auto* discover_cmd = app.add_subcommand("discover", "Tiered PC discovery on a CSV of observations");
  discover_cmd->add_option("--data", data_path, "CSV with a header row")->required();
  discover_cmd->add_option("--out", dag_out, "DAG JSON output (stdout if omitted)");
  discover_cmd->add_option("--problem", discover_problem, "Take the node tiers from a registered problem");
  discover_cmd->add_option("--tiers", tiers, "name:tier pairs, e.g. X1:0,Z:1,Y:2");
  discover_cmd->add_option("--alpha", alpha, "Significance level");
  discover_cmd->add_option("--max-condition", max_cond, "Largest conditioning set");

  std::string points_path, ref_text;
  long mc_samples = 0;
  std::uint64_t hv_seed = 0;
  auto* hv_cmd = app.add_subcommand("hv", "Hypervolume of a CSV of objective vectors (minimization)");
  hv_cmd->add_option("--points", points_path, "CSV, one point per row")->required();
  hv_cmd->add_option("--ref", ref_text, "Reference point, comma-separated")->required();
  hv_cmd->add_option("--mc", mc_samples, "Also report a Monte Carlo estimate with this many samples");
  hv_cmd->add_option("--seed", hv_seed, "Monte Carlo seed");

  std::string theory_out;
  int perturbations = 0;
  auto* theory_cmd = app.add_subcommand("theory", "Check the regret bound on one tracked run");
  theory_o.attach(theory_cmd);
  theory_cmd->add_option("--out", theory_out, "JSON report path (stdout if omitted)");
  theory_cmd->add_option("--perturbations", perturbations, "Front pairs for the Lipschitz estimate");

  std::string deltas = "0,10,100", bias_out;
  int bias_seeds = 10;
  auto* bias_cmd = app.add_subcommand("bias", "Adversarial bias sweep of rescue and hvkg_noncausal");
  bias_o.attach(bias_cmd, false);
  bias_cmd->add_option("--deltas", deltas, "Comma-separated bias scales");
  bias_cmd->add_option("--seeds", bias_seeds, "Number of seeds");
  bias_cmd->add_option("--out", bias_out, "JSON output (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (log_level == "debug") {
      log::set_level(log::Level::kDebug);
    } else if (log_level == "info") {
      log::set_level(log::Level::kInfo);
    } else if (log_level == "warn") {
      log::set_level(log::Level::kWarn);
    } else if (log_level == "silent") {
      log::set_level(log::Level::kSilent);
    } else {
      throw ConfigError("--log-level must be debug, info, warn or silent");
    }
    if (*run_cmd) return cmd_run(run_o, dump_acquisition);
    if (*ablate_cmd) return cmd_ablate(ablate_o, methods, seeds);
    if (*discover_cmd) return cmd_discover(data_path, dag_out, discover_problem, tiers, alpha, max_cond);
    if (*hv_cmd) return cmd_hv(points_path, ref_text, mc_samples, hv_seed);
    if (*theory_cmd) return cmd_theory(theory_o, theory_out, perturbations);
    if (*bias_cmd) return cmd_bias(bias_o, deltas, bias_seeds, bias_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
