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

#include "rescue/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "rescue/errors.hpp"
#include "rescue/log.hpp"
#include "rescue/pareto.hpp"
#include "rescue/sampling.hpp"

namespace rescue::runner {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed streams under the root seed.
enum Stream : std::uint64_t {
  kInitStream = 1,
  kObservationalStream = 2,
  kNoiseStream = 3,
  kCausalStream = 4,
  kHyperoptStream = 5,
  kAcquisitionStream = 6,
  kTrackingStream = 7,
  kExtractionStream = 8,
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Reads known keys into the fields and rejects anything else.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }
  const json* sub(const char* key) {
    seen_.push_back(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

json nsga_to_json(const moea::Nsga2Config& c) {
  return {{"population", c.population},
          {"generations", c.generations},
          {"crossover_eta", c.crossover_eta},
          {"crossover_probability", c.crossover_probability},
          {"mutation_eta", c.mutation_eta},
          {"mutation_probability", c.mutation_probability}};
}

void nsga_from_json(const json& j, moea::Nsga2Config& c, const std::string& where) {
  Reader r(j, where);
  r.get("population", c.population);
  r.get("generations", c.generations);
  r.get("crossover_eta", c.crossover_eta);
  r.get("crossover_probability", c.crossover_probability);
  r.get("mutation_eta", c.mutation_eta);
  r.get("mutation_probability", c.mutation_probability);
  r.finish();
}

surrogate::KernelSpec initial_spec(const KernelConfig& k, int d, int m) {
  auto spec = surrogate::KernelSpec::defaults(d, m);
  spec.input_lengthscales.setConstant(k.lengthscale);
  spec.fidelity_lengthscale = k.fidelity_lengthscale;
  spec.noise_variance = k.noise_variance;
  spec.prior_scale = k.prior_scale;
  return spec;
}

Vector to_problem_sign(const Vector& y, const std::vector<bool>& maximize) {
  Vector out = y;
  for (int m = 0; m < out.size(); ++m) {
    if (static_cast<std::size_t>(m) < maximize.size() && maximize[static_cast<std::size_t>(m)]) out[m] = -out[m];
  }
  return out;
}

std::string fidelity_key(double s) {
  std::ostringstream os;
  os << std::setprecision(3) << s;
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error("export: cannot write " + path.string());
}

// Everything the loop refits each iteration.
class Models {
 public:
  Models(const RunConfig& cfg, const Problem& problem) : cfg_(cfg), problem_(problem) {
    const int d = problem.config_space().dims();
    obj_spec_ = initial_spec(cfg.kernel, d, problem.num_objectives());
    if (problem.num_constraints() > 0) con_spec_ = initial_spec(cfg.kernel, d, problem.num_constraints());
    obj_prior_ = surrogate::CausalPrior(problem.num_objectives());
    con_prior_ = surrogate::CausalPrior(problem.num_constraints());
  }

  void set_causal_model(std::shared_ptr<const causal::CausalModel> m) {
    obj_prior_ = surrogate::CausalPrior(m, surrogate::CausalPrior::Block::kObjectives);
    if (problem_.num_constraints() > 0) con_prior_ = surrogate::CausalPrior(m, surrogate::CausalPrior::Block::kConstraints);
  }

  void fit(const Dataset& data, int t) {
    surrogate::FitOptions opt;
    opt.hyperopt = cfg_.kernel.hyperopt;
    opt.standardize = cfg_.kernel.standardize;
    opt.restarts = cfg_.kernel.restarts;
    opt.evaluations_per_restart = cfg_.kernel.evaluations_per_restart;
    opt.seed = derive_seed(derive_seed(cfg_.seed, kHyperoptStream), static_cast<std::uint64_t>(t));
    const auto& space = problem_.config_space();
    obj_ = fit_block(data, space, obj_spec_, obj_prior_, opt, false);
    obj_spec_ = obj_->kernel();
    if (problem_.num_constraints() > 0) {
      con_ = fit_block(data, space, con_spec_, con_prior_, opt, true);
      con_spec_ = con_->kernel();
    }
  }

  const surrogate::MfcgpPosterior& objectives() const { return *obj_; }
  const surrogate::MfcgpPosterior* constraints() const { return con_.get(); }

 private:
  std::unique_ptr<surrogate::MfcgpPosterior> fit_block(const Dataset& data, const ConfigSpace& space,
                                                       const surrogate::KernelSpec& spec,
                                                       const surrogate::CausalPrior& prior,
                                                       const surrogate::FitOptions& opt, bool constraints) {
    auto once = [&](const surrogate::KernelSpec& k, const surrogate::FitOptions& o) {
      return std::make_unique<surrogate::MfcgpPosterior>(
          constraints ? surrogate::fit_constraints(data, space, k, prior, o) : surrogate::fit_objectives(data, space, k, prior, o));
    };
    try {
      return once(spec, opt);
    } catch (const NumericalError& e) {
      log::warn(std::string("surrogate fit failed (") + e.what() + "); retrying with defaults and larger jitter");
      auto k = initial_spec(cfg_.kernel, space.dims(), constraints ? problem_.num_constraints() : problem_.num_objectives());
      k.jitter = 1e-3;
      auto o = opt;
      o.hyperopt = false;
      return once(k, o);
    }
  }

  const RunConfig& cfg_;
  const Problem& problem_;
  surrogate::KernelSpec obj_spec_, con_spec_;
  surrogate::CausalPrior obj_prior_, con_prior_;
  std::unique_ptr<surrogate::MfcgpPosterior> obj_, con_;
};

causal::CausalGraph read_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open DAG file " + path);
  try {
    return causal::CausalGraph::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

acquisition::Context make_context(const Problem& problem, const Models& models, const RunConfig& cfg,
                                  const FidelitySpace& fidelities) {
  acquisition::Context ctx;
  ctx.objectives = &models.objectives();
  ctx.constraints = models.constraints();
  ctx.constraint_specs = problem.constraints();
  ctx.reference = *problem.reference_point();
  ctx.cost = cfg.cost;
  ctx.fidelities = fidelities;
  return ctx;
}

}  // namespace

// --------------------------------------------------------------------------
// Methods and configuration

std::string method_name(Method m) {
  switch (m) {
    case Method::kRescue:
      return "rescue";
    case Method::kHvkgNoncausal:
      return "hvkg_noncausal";
    case Method::kEhviSingleFidelity:
      return "ehvi_single_fidelity";
  }
  return "rescue";
}

Method parse_method(const std::string& name) {
  if (name == "rescue") return Method::kRescue;
  if (name == "hvkg_noncausal" || name == "hvkg") return Method::kHvkgNoncausal;
  if (name == "ehvi_single_fidelity" || name == "ehvi") return Method::kEhviSingleFidelity;
  throw ConfigError("unknown method '" + name + "'");
}

void RunConfig::validate() const {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ConfigError("budget must be positive");
  if (effective_init_budget() > budget) throw ConfigError("init_budget must not exceed budget");
  if (cpm_cycle < 1) throw ConfigError("cpm_cycle must be >= 1");
  if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
  if (kernel.restarts < 1 || kernel.evaluations_per_restart < 1) throw ConfigError("kernel search counts must be >= 1");
  if (!(kernel.lengthscale > 0.0) || !(kernel.fidelity_lengthscale > 0.0) || !(kernel.noise_variance > 0.0) ||
      !(kernel.prior_scale >= 0.0)) {
    throw ConfigError("kernel scales must be positive");
  }
  if (causal.n_observational < 10) throw ConfigError("causal.n_observational must be >= 10");
  if (!(causal.alpha > 0.0 && causal.alpha < 1.0)) throw ConfigError("causal.alpha must lie in (0,1)");
  if (causal.n_mc < 2) throw ConfigError("causal.n_mc must be >= 2");
  acquisition.validate();
  nsga2.validate();
  tracking_nsga2.validate();
  const auto names = benchmarks::problem_names();
  if (std::find(names.begin(), names.end(), problem) == names.end()) throw ConfigError("unknown problem '" + problem + "'");
}

json RunConfig::to_json() const {
  json j;
  j["problem"] = {{"name", problem},
                  {"delta_scale", problem_options.delta_scale},
                  {"cancer_threshold", problem_options.cancer_threshold},
                  {"noise_std", problem_options.noise_std}};
  j["budget"] = budget;
  j["init_budget"] = init_budget;
  j["cpm_cycle"] = cpm_cycle;
  j["max_iterations"] = max_iterations;
  j["cost"] = cost_to_json(cost);
  j["method"] = method_name(method);
  j["seed"] = seed;
  j["acquisition"] = {{"w", acquisition.w},
                      {"n_fantasies", acquisition.n_fantasies},
                      {"n_inner_candidates", acquisition.n_inner_candidates},
                      {"n_outer_candidates", acquisition.n_outer_candidates},
                      {"continuous_fidelity_levels", acquisition.continuous_fidelity_levels},
                      {"feasibility_threshold", acquisition.feasibility_threshold},
                      {"design", acquisition.design == sampling::Design::kSobol ? "sobol" : "lhs"}};
  j["kernel"] = {{"hyperopt", kernel.hyperopt},
                 {"standardize", kernel.standardize},
                 {"restarts", kernel.restarts},
                 {"evaluations_per_restart", kernel.evaluations_per_restart},
                 {"lengthscale", kernel.lengthscale},
                 {"fidelity_lengthscale", kernel.fidelity_lengthscale},
                 {"noise_variance", kernel.noise_variance},
                 {"prior_scale", kernel.prior_scale}};
  j["causal"] = {{"n_observational", causal.n_observational},
                 {"alpha", causal.alpha},
                 {"max_condition_size", causal.max_condition_size},
                 {"n_mc", causal.n_mc},
                 {"agnostic", causal.agnostic},
                 {"dag_file", causal.dag_file}};
  j["nsga2"] = nsga_to_json(nsga2);
  j["tracking_nsga2"] = nsga_to_json(tracking_nsga2);
  j["track_theory"] = track_theory;
  j["keep_acquisition_tables"] = keep_acquisition_tables;
  j["out_dir"] = out_dir;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Reader r(j, "config");
  if (const json* p = r.sub("problem")) {
    if (p->is_string()) {
      c.problem = p->get<std::string>();
    } else {
      Reader rp(*p, "config.problem");
      rp.get("name", c.problem);
      rp.get("delta_scale", c.problem_options.delta_scale);
      rp.get("cancer_threshold", c.problem_options.cancer_threshold);
      rp.get("noise_std", c.problem_options.noise_std);
      rp.finish();
    }
  }
  r.get("budget", c.budget);
  r.get("init_budget", c.init_budget);
  r.get("cpm_cycle", c.cpm_cycle);
  r.get("max_iterations", c.max_iterations);
  if (const json* p = r.sub("cost")) c.cost = cost_from_json(*p);
  std::string method = method_name(c.method);
  r.get("method", method);
  c.method = parse_method(method);
  r.get("seed", c.seed);
  if (const json* p = r.sub("acquisition")) {
    Reader ra(*p, "config.acquisition");
    ra.get("w", c.acquisition.w);
    ra.get("n_fantasies", c.acquisition.n_fantasies);
    ra.get("n_inner_candidates", c.acquisition.n_inner_candidates);
    ra.get("n_outer_candidates", c.acquisition.n_outer_candidates);
    ra.get("continuous_fidelity_levels", c.acquisition.continuous_fidelity_levels);
    ra.get("feasibility_threshold", c.acquisition.feasibility_threshold);
    std::string design = "sobol";
    ra.get("design", design);
    if (design == "sobol") {
      c.acquisition.design = sampling::Design::kSobol;
    } else if (design == "lhs") {
      c.acquisition.design = sampling::Design::kLhs;
    } else {
      throw ConfigError("config.acquisition.design must be 'sobol' or 'lhs'");
    }
    ra.finish();
  }
  if (const json* p = r.sub("kernel")) {
    Reader rk(*p, "config.kernel");
    rk.get("hyperopt", c.kernel.hyperopt);
    rk.get("standardize", c.kernel.standardize);
    rk.get("restarts", c.kernel.restarts);
    rk.get("evaluations_per_restart", c.kernel.evaluations_per_restart);
    rk.get("lengthscale", c.kernel.lengthscale);
    rk.get("fidelity_lengthscale", c.kernel.fidelity_lengthscale);
    rk.get("noise_variance", c.kernel.noise_variance);
    rk.get("prior_scale", c.kernel.prior_scale);
    rk.finish();
  }
  if (const json* p = r.sub("causal")) {
    Reader rc(*p, "config.causal");
    rc.get("n_observational", c.causal.n_observational);
    rc.get("alpha", c.causal.alpha);
    rc.get("max_condition_size", c.causal.max_condition_size);
    rc.get("n_mc", c.causal.n_mc);
    rc.get("agnostic", c.causal.agnostic);
    rc.get("dag_file", c.causal.dag_file);
    rc.finish();
  }
  if (const json* p = r.sub("nsga2")) nsga_from_json(*p, c.nsga2, "config.nsga2");
  if (const json* p = r.sub("tracking_nsga2")) nsga_from_json(*p, c.tracking_nsga2, "config.tracking_nsga2");
  r.get("track_theory", c.track_theory);
  r.get("keep_acquisition_tables", c.keep_acquisition_tables);
  r.get("out_dir", c.out_dir);
  r.finish();
  c.validate();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return from_json(j);
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("out_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

// --------------------------------------------------------------------------
// Run log helpers

double RunLog::violation_rate() const {
  int n = 0, bad = 0;
  for (const auto& r : rows) {
    if (r.t < 1) continue;
    ++n;
    bad += r.feasible ? 0 : 1;
  }
  return n == 0 ? 0.0 : static_cast<double>(bad) / n;
}

std::vector<double> RunLog::queried_fidelities() const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.t >= 1) out.push_back(r.s);
  }
  return out;
}

// --------------------------------------------------------------------------
// Inferred front

InferredFront inferred_front(const Problem& problem, const surrogate::MfcgpPosterior& objectives,
                             const surrogate::MfcgpPosterior* constraints, const Vector& reference,
                             const moea::Nsga2Config& nsga, double feasibility_threshold) {
  acquisition::Context ctx;
  ctx.objectives = &objectives;
  ctx.constraints = constraints;
  ctx.constraint_specs = problem.constraints();
  ctx.reference = reference;
  const moea::Objective fn = [&](const Vector& x) {
    moea::Fitness f;
    f.objectives = objectives.predict(x, kTargetFidelity).mean;
    for (double p : acquisition::feasibility_probability(ctx, x)) {
      if (!(p > feasibility_threshold)) f.violation += feasibility_threshold - p + 1e-12;
    }
    return f;
  };
  const auto res = moea::nsga2_optimize(fn, problem.config_space(), nsga);
  InferredFront out;
  out.infeasible = res.infeasible;
  if (res.infeasible) return out;
  std::vector<Vector> xs, ys;
  for (const auto& x : res.x) {
    const auto e = problem.evaluate(x, kTargetFidelity);
    if (!problem.feasible(e.h)) continue;
    xs.push_back(x);
    ys.push_back(e.y);
  }
  for (int i : pareto::pareto_indices(ys)) {
    out.x.push_back(xs[static_cast<std::size_t>(i)]);
    out.y.push_back(ys[static_cast<std::size_t>(i)]);
  }
  out.hv = out.y.empty() ? 0.0 : pareto::hypervolume(out.y, reference);
  return out;
}

double reference_hv_star(const Problem& problem, const Vector& reference) {
  auto pts = benchmarks::oracle_pareto(problem, benchmarks::default_oracle_grid(problem), reference).front.points;
  moea::Nsga2Config nsga;
  nsga.population = 100;
  nsga.generations = 200;
  nsga.seed = 0;
  nsga.reference = reference;
  const moea::Objective fn = [&](const Vector& x) {
    const auto e = problem.evaluate(x, kTargetFidelity);
    return moea::Fitness{e.y, problem.total_violation(e.h)};
  };
  const auto res = moea::nsga2_optimize(fn, problem.config_space(), nsga);
  if (!res.infeasible) pts.insert(pts.end(), res.f.begin(), res.f.end());
  return pts.empty() ? 0.0 : pareto::hypervolume(pareto::pareto_filter(pts), reference);
}

// --------------------------------------------------------------------------
// The loop

std::shared_ptr<const causal::CausalModel> initial_causal_model(const RunConfig& config, const Problem& problem) {
  if (config.method != Method::kRescue || config.causal.agnostic) return nullptr;
  const auto observational = causal::observational_from_problem(problem, config.causal.n_observational,
                                                                derive_seed(config.seed, kObservationalStream));
  const causal::CausalModelOptions cm_opts{config.causal.n_mc, derive_seed(config.seed, kCausalStream)};
  if (!config.causal.dag_file.empty()) {
    return std::make_shared<const causal::CausalModel>(
        causal::causal_model_from_graph(problem, read_graph(config.causal.dag_file), observational, cm_opts));
  }
  return std::make_shared<const causal::CausalModel>(causal::learn_causal_model(
      problem, observational, {config.causal.alpha, config.causal.max_condition_size}, cm_opts));
}

RunLog run(const RunConfig& config) {
  config.validate();
  const auto problem = benchmarks::make_problem(config.problem, config.problem_options);
  return run(config, *problem);
}

RunLog run(const RunConfig& config, const Problem& problem) {
  config.validate();
  if (!problem.reference_point()) throw ConfigError("run: problem has no reference point");
  const Vector ref = *problem.reference_point();
  const bool causal_method = config.method == Method::kRescue && !config.causal.agnostic;
  const bool single_fidelity = config.method == Method::kEhviSingleFidelity;

  RunLog lg;
  lg.config = config;
  lg.problem = problem.name();
  lg.x_names = problem.config_space().names();
  lg.y_names = problem.objective_names();
  for (const auto& c : problem.constraints()) lg.h_names.push_back(c.name);
  lg.maximize = problem.maximize();
  lg.problem_definition = ProblemSchema::of(problem, config.cost).to_json();
  lg.reference = ref;

  const auto grid_sizes = benchmarks::default_oracle_grid(problem);
  lg.hv_star = reference_hv_star(problem, ref);
  std::vector<Vector> sigma_grid;
  if (config.track_theory) {
    sigma_grid = benchmarks::grid_configs(problem.config_space(), grid_sizes);
    lg.theory.grid_points = static_cast<int>(sigma_grid.size());
  }

  // Shared initial design.
  sampling::InitSamplerConfig init_cfg;
  init_cfg.budget = config.effective_init_budget();
  init_cfg.seed = derive_seed(config.seed, kInitStream);
  Dataset all = sampling::initial_sample(problem, config.cost, init_cfg);
  lg.init_records = all.size();
  for (const auto& o : all.records()) {
    IterationRow row;
    row.t = 0;
    row.x = o.x;
    row.s = o.s;
    row.y = o.y;
    row.h = o.h;
    row.cost = o.cost;
    row.acquisition_value = kNaN;
    row.feasible = problem.feasible(o.h);
    lg.rows.push_back(row);
  }
  {
    double c = 0.0;
    for (auto& r : lg.rows) r.cumulative_cost = (c += r.cost);
    if (!lg.rows.empty()) lg.rows.back().cumulative_cost = all.cumulative_cost();
  }
  // The single-fidelity method models target-fidelity records only.
  auto model_data = [&]() { return single_fidelity ? all.target_fidelity_subset() : all; };

  // Causal model from observational logs.
  causal::ObservationalDataset observational;
  causal::CausalGraph given_graph;
  const causal::PcOptions pc{config.causal.alpha, config.causal.max_condition_size};
  const causal::CausalModelOptions cm_opts{config.causal.n_mc, derive_seed(config.seed, kCausalStream)};
  Models models(config, problem);
  if (causal_method) {
    observational = causal::observational_from_problem(problem, config.causal.n_observational,
                                                       derive_seed(config.seed, kObservationalStream));
    if (!config.causal.dag_file.empty()) given_graph = read_graph(config.causal.dag_file);
    models.set_causal_model(initial_causal_model(config, problem));
  }

  std::mt19937_64 noise(derive_seed(config.seed, kNoiseStream));
  const FidelitySpace fidelities = single_fidelity ? FidelitySpace::target_only() : problem.fidelity_space();

  // Fills inferred HV and regret for the state after iteration t.
  auto assess = [&](int t) {
    auto nsga = config.tracking_nsga2;
    nsga.seed = derive_seed(derive_seed(config.seed, kTrackingStream), static_cast<std::uint64_t>(t));
    const auto front = inferred_front(problem, models.objectives(), models.constraints(), ref, nsga,
                                      config.acquisition.feasibility_threshold);
    const double lr = pareto::log_hv_regret(lg.hv_star, front.hv);
    for (auto it = lg.rows.rbegin(); it != lg.rows.rend() && it->t == t; ++it) {
      it->inferred_hv = front.hv;
      it->log_regret = lr;
    }
    lg.regret_curve.emplace_back(all.cumulative_cost(), std::max(0.0, lg.hv_star - front.hv));
    if (config.track_theory) {
      lg.theory.lhs.push_back(lg.hv_star - front.hv);
      double smax = 0.0;
      for (const auto& p : models.objectives().predict(sigma_grid, std::vector<double>(sigma_grid.size(), kTargetFidelity))) {
        smax = std::max(smax, p.std().norm());
      }
      lg.theory.sigma_max.push_back(smax);
    }
  };

  auto abort_with = [&](const std::exception& e) {
    lg.aborted = true;
    lg.abort_reason = e.what();
    if (!config.out_dir.empty()) export_results(lg, config.out_dir);
  };

  try {
    models.fit(model_data(), 0);
    if (lg.rows.empty()) lg.regret_curve.emplace_back(0.0, lg.hv_star);
    else assess(0);

    const bool loop_allowed = config.budget > config.effective_init_budget();
    int t = 0;
    while (loop_allowed && all.cumulative_cost() <= config.budget &&
           (config.max_iterations == 0 || t < config.max_iterations)) {
      ++t;
      if (causal_method && causal::cpm_update_due(t, config.cpm_cycle)) {
        const auto cm = config.causal.dag_file.empty()
                            ? causal::update_cpm(problem, observational, all, pc, cm_opts)
                            : causal::causal_model_from_graph(
                                  problem, given_graph, observational.concat(causal::rows_from_dataset(problem, all)), cm_opts);
        models.set_causal_model(std::make_shared<const causal::CausalModel>(cm));
        models.fit(model_data(), t);
      }

      const auto ctx = make_context(problem, models, config, fidelities);
      auto acq_cfg = config.acquisition;
      acq_cfg.seed = derive_seed(derive_seed(config.seed, kAcquisitionStream), static_cast<std::uint64_t>(t));
      acquisition::AcquisitionResult choice;
      if (single_fidelity) {
        std::vector<Vector> observed;
        for (const auto& o : all.records()) {
          if (std::abs(o.s - kTargetFidelity) <= 1e-12 && problem.feasible(o.h)) observed.push_back(o.y);
        }
        choice = acquisition::select_next_ehvi(ctx, pareto::pareto_filter(observed), acq_cfg);
      } else {
        choice = acquisition::select_next(ctx, acq_cfg);
      }
      if (config.track_theory) {
        if (single_fidelity) {
          lg.theory.acq_gain.push_back(kNaN);
          lg.theory.sf_gain.push_back(kNaN);
        } else {
          lg.theory.acq_gain.push_back(choice.value * config.cost.cost(choice.x, choice.s));
          lg.theory.sf_gain.push_back(acquisition::chvkg(ctx, choice.x, kTargetFidelity, acq_cfg) *
                                      config.cost.cost(choice.x, kTargetFidelity));
        }
      }

      const auto e = problem.evaluate(choice.x, choice.s, &noise);
      Observation obs{choice.x, choice.s, e.y, e.h, e.z, config.cost.cost(choice.x, choice.s)};
      all.append(obs);
      IterationRow row;
      row.t = t;
      row.x = obs.x;
      row.s = obs.s;
      row.y = obs.y;
      row.h = obs.h;
      row.cost = obs.cost;
      row.cumulative_cost = all.cumulative_cost();
      row.acquisition_value = choice.value;
      row.feasible = problem.feasible(problem.evaluate(obs.x, obs.s).h);
      lg.rows.push_back(row);
      if (config.keep_acquisition_tables) lg.acquisitions.push_back(std::move(choice));
      lg.iterations = t;

      models.fit(model_data(), t);
      assess(t);
    }

    auto nsga = config.nsga2;
    nsga.seed = derive_seed(config.seed, kExtractionStream);
    const auto front = inferred_front(problem, models.objectives(), models.constraints(), ref, nsga,
                                      config.acquisition.feasibility_threshold);
    lg.pareto_x = front.x;
    lg.pareto_y = front.y;
    lg.extraction_infeasible = front.infeasible;
    lg.final_inferred_hv = front.hv;
    lg.final_log_regret = pareto::log_hv_regret(lg.hv_star, front.hv);
  } catch (const NumericalError& e) {
    abort_with(e);
    throw;
  }

  if (lg.regret_curve.size() >= 2) lg.aur = pareto::area_under_regret(lg.regret_curve);
  if (!config.out_dir.empty()) export_results(lg, config.out_dir);
  return lg;
}

// --------------------------------------------------------------------------
// Ablation

AblationResult run_method_ablation(const RunConfig& config, const std::vector<Method>& methods,
                                   const std::vector<std::uint64_t>& seeds) {
  if (methods.empty()) throw ConfigError("ablation: at least one method required");
  if (seeds.empty()) throw ConfigError("ablation: at least one seed required");
  AblationResult res;
  res.methods = methods;
  res.seeds = seeds;
  for (Method m : methods) {
    const std::string name = method_name(m);
    auto& logs = res.runs[name];
    for (std::uint64_t seed : seeds) {
      RunConfig c = config;
      c.method = m;
      c.seed = seed;
      if (!config.out_dir.empty()) {
        c.out_dir = (std::filesystem::path(config.out_dir) / name / ("seed_" + std::to_string(seed))).string();
      }
      logs.push_back(run(c));
    }
    MethodSummary s;
    s.method = name;
    s.runs = static_cast<int>(logs.size());
    std::vector<double> aur, fin, its;
    double viol = 0.0;
    for (const auto& l : logs) {
      aur.push_back(l.aur);
      fin.push_back(l.final_log_regret);
      its.push_back(l.iterations);
      viol += l.violation_rate();
      for (double fs : l.queried_fidelities()) ++s.fidelity_histogram[fidelity_key(fs)];
    }
    s.median_aur = median(aur);
    s.mean_aur = std::accumulate(aur.begin(), aur.end(), 0.0) / aur.size();
    s.median_final_log_regret = median(fin);
    s.median_iterations = median(its);
    s.violation_rate = viol / logs.size();
    res.summary.push_back(s);
  }
  const std::string lead = method_name(methods.front());
  for (std::size_t k = 1; k < methods.size(); ++k) {
    const std::string other = method_name(methods[k]);
    PairedStat p;
    p.method = lead;
    p.baseline = other;
    std::vector<double> d;
    double lead_mean = 0.0, other_mean = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const double a = res.runs[lead][i].aur, b = res.runs[other][i].aur;
      d.push_back(b - a);
      lead_mean += a;
      other_mean += b;
      p.wins += a <= b ? 1 : 0;
    }
    const double n = static_cast<double>(d.size());
    lead_mean /= n;
    other_mean /= n;
    p.mean_difference = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : d) ss += (v - p.mean_difference) * (v - p.mean_difference);
    const double sd = d.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (sd > 0.0) {
      p.t_statistic = p.mean_difference / (sd / std::sqrt(n));
      p.cohen_d = p.mean_difference / sd;
      const boost::math::students_t dist(n - 1.0);
      p.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(p.t_statistic)));
    }
    p.gain_percent = other_mean != 0.0 ? 100.0 * (other_mean - lead_mean) / std::abs(other_mean) : 0.0;
    res.paired.push_back(p);
  }
  return res;
}

json AblationResult::to_json() const {
  json j;
  j["seeds"] = seeds;
  j["methods"] = json::array();
  for (const auto& s : summary) {
    j["methods"].push_back({{"method", s.method},
                            {"runs", s.runs},
                            {"median_aur", s.median_aur},
                            {"mean_aur", s.mean_aur},
                            {"median_final_log_regret", s.median_final_log_regret},
                            {"median_iterations", s.median_iterations},
                            {"violation_rate", s.violation_rate},
                            {"fidelity_histogram", s.fidelity_histogram}});
  }
  j["paired"] = json::array();
  for (const auto& p : paired) {
    j["paired"].push_back({{"method", p.method},
                           {"baseline", p.baseline},
                           {"mean_aur_difference", p.mean_difference},
                           {"t_statistic", p.t_statistic},
                           {"p_value", p.p_value},
                           {"cohen_d", p.cohen_d},
                           {"gain_percent", p.gain_percent},
                           {"wins", p.wins}});
  }
  j["per_seed"] = json::object();
  for (const auto& [name, logs] : runs) {
    json arr = json::array();
    for (const auto& l : logs) {
      arr.push_back({{"seed", l.config.seed},
                     {"aur", l.aur},
                     {"final_log_regret", l.final_log_regret},
                     {"iterations", l.iterations}});
    }
    j["per_seed"][name] = arr;
  }
  return j;
}

// --------------------------------------------------------------------------
// Export

std::vector<std::string> run_csv_header(const RunLog& lg) {
  std::vector<std::string> h{"t"};
  for (const auto& n : lg.x_names) h.push_back("x_" + n);
  h.push_back("s");
  for (const auto& n : lg.y_names) h.push_back("y_" + n);
  for (const auto& n : lg.h_names) h.push_back("h_" + n);
  for (const char* c : {"cost", "cumulative_cost", "inferred_hv", "log_regret", "acquisition_value", "feasible"}) h.push_back(c);
  return h;
}

void export_results(const RunLog& lg, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "plotdata", ec);
  if (ec) throw Error("export: cannot create " + (root / "plotdata").string() + ": " + ec.message());

  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out + "\n";
  };

  std::string run_csv = join(run_csv_header(lg));
  for (const auto& r : lg.rows) {
    std::vector<std::string> f{std::to_string(r.t)};
    for (int j = 0; j < r.x.size(); ++j) f.push_back(num(r.x[j]));
    f.push_back(num(r.s));
    const Vector y = to_problem_sign(r.y, lg.maximize);
    for (int j = 0; j < y.size(); ++j) f.push_back(num(y[j]));
    for (int j = 0; j < r.h.size(); ++j) f.push_back(num(r.h[j]));
    f.push_back(num(r.cost));
    f.push_back(num(r.cumulative_cost));
    f.push_back(num(r.inferred_hv));
    f.push_back(num(r.log_regret));
    f.push_back(num(r.acquisition_value));
    f.push_back(r.feasible ? "1" : "0");
    run_csv += join(f);
  }
  write_file(root / "run.csv", run_csv);

  std::vector<std::string> ph;
  for (const auto& n : lg.x_names) ph.push_back("x_" + n);
  for (const auto& n : lg.y_names) ph.push_back("y_" + n);
  std::string pareto_csv = join(ph);
  for (std::size_t i = 0; i < lg.pareto_x.size(); ++i) {
    std::vector<std::string> f;
    for (int j = 0; j < lg.pareto_x[i].size(); ++j) f.push_back(num(lg.pareto_x[i][j]));
    const Vector y = to_problem_sign(lg.pareto_y[i], lg.maximize);
    for (int j = 0; j < y.size(); ++j) f.push_back(num(y[j]));
    pareto_csv += join(f);
  }
  write_file(root / "pareto.csv", pareto_csv);

  json summary{{"method", method_name(lg.config.method)},
               {"problem", lg.problem},
               {"seed", lg.config.seed},
               {"config_hash", lg.config.hash()},
               {"aur", lg.aur},
               {"final_log_regret", lg.final_log_regret},
               {"final_inferred_hv", lg.final_inferred_hv},
               {"hv_star", lg.hv_star},
               {"reference", std::vector<double>(lg.reference.data(), lg.reference.data() + lg.reference.size())},
               {"iterations", lg.iterations},
               {"init_records", lg.init_records},
               {"total_cost", lg.total_cost()},
               {"budget", lg.config.budget},
               {"violation_rate", lg.violation_rate()},
               {"pareto_size", lg.pareto_x.size()},
               {"extraction_infeasible", lg.extraction_infeasible},
               {"aborted", lg.aborted}};
  if (lg.aborted) summary["abort_reason"] = lg.abort_reason;
  write_file(root / "summary.json", summary.dump(2) + "\n");
  write_file(root / "config.json", lg.config.to_json().dump(2) + "\n");
  write_file(root / "problem.json", lg.problem_definition.dump(2) + "\n");

  std::string curve = "cumulative_cost,regret,log_regret\n";
  for (const auto& [c, r] : lg.regret_curve) {
    curve += num(c) + "," + num(r) + "," + num(std::log10(std::max(r, pareto::kRegretFloor))) + "\n";
  }
  write_file(root / "plotdata" / "regret_vs_cost.csv", curve);

  if (lg.config.track_theory) {
    std::string th = "t,lhs,sigma_max,acq_gain,sf_gain\n";
    for (std::size_t t = 0; t < lg.theory.lhs.size(); ++t) {
      const double a = t >= 1 && t - 1 < lg.theory.acq_gain.size() ? lg.theory.acq_gain[t - 1] : kNaN;
      const double b = t >= 1 && t - 1 < lg.theory.sf_gain.size() ? lg.theory.sf_gain[t - 1] : kNaN;
      th += std::to_string(t) + "," + num(lg.theory.lhs[t]) + "," + num(lg.theory.sigma_max[t]) + "," + num(a) + "," +
            num(b) + "\n";
    }
    write_file(root / "theory.csv", th);
  }
  if (!lg.acquisitions.empty()) {
    fs::create_directories(root / "acquisition", ec);
    if (ec) throw Error("export: cannot create " + (root / "acquisition").string() + ": " + ec.message());
    for (std::size_t i = 0; i < lg.acquisitions.size(); ++i) {
      std::ostringstream os;
      acquisition::write_table_csv(lg.acquisitions[i], os);
      char name[32];
      std::snprintf(name, sizeof name, "iter_%04zu.csv", i + 1);
      write_file(root / "acquisition" / name, os.str());
    }
  }
}

// --------------------------------------------------------------------------
// Problem definition files

json cost_to_json(const CostModel& cost) {
  if (const auto* e = std::get_if<CostModel::Exponential>(&cost.form())) return {{"form", "exponential"}, {"rate", e->rate}};
  if (const auto* t = std::get_if<CostModel::Table>(&cost.form())) {
    json costs = json::object();
    for (const auto& [s, c] : t->cost_by_fidelity) costs[num(s)] = c;
    return {{"form", "table"}, {"costs", costs}};
  }
  throw ConfigError("cost: custom cost functions cannot be serialized");
}

CostModel cost_from_json(const json& j) {
  try {
    const std::string form = j.at("form").get<std::string>();
    if (form == "exponential") {
      for (const auto& [k, v] : j.items()) {
        if (k != "form" && k != "rate") throw ConfigError("cost: unknown key '" + k + "'");
      }
      const double rate = j.value("rate", 4.8);
      if (!std::isfinite(rate) || rate < 0.0) throw ConfigError("cost: rate must be finite and >= 0");
      return CostModel::exponential(rate);
    }
    if (form == "table") {
      CostModel::Table t;
      for (const auto& [k, v] : j.at("costs").items()) {
        const double c = v.get<double>();
        if (!(c > 0.0)) throw ConfigError("cost: table costs must be positive");
        t.cost_by_fidelity[std::stod(k)] = c;
      }
      if (t.cost_by_fidelity.empty()) throw ConfigError("cost: empty table");
      return CostModel(t);
    }
    throw ConfigError("cost: unknown form '" + form + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cost: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ConfigError("cost: table keys must be fidelity values");
  }
}

json ProblemSchema::to_json() const {
  json j;
  j["dims"] = config_space.dims();
  j["bounds"] = json::array();
  for (const auto& b : config_space.bounds()) j["bounds"].push_back({b.lo, b.hi});
  j["names"] = config_space.names();
  if (fidelity_space.is_discrete()) {
    j["fidelities"] = {{"kind", "discrete"}, {"levels", fidelity_space.levels()}};
  } else {
    j["fidelities"] = {{"kind", "continuous"}, {"min", fidelity_space.min()}};
  }
  j["M"] = num_objectives;
  j["objectives"] = objective_names;
  j["maximize"] = maximize;
  j["Q"] = constraints.size();
  j["constraint_names"] = json::array();
  j["thresholds"] = json::array();
  j["directions"] = json::array();
  for (const auto& c : constraints) {
    j["constraint_names"].push_back(c.name);
    j["thresholds"].push_back(c.threshold);
    j["directions"].push_back(c.direction == ConstraintDirection::kAtLeast ? ">=" : "<=");
  }
  j["cost"] = cost_to_json(cost);
  return j;
}

ProblemSchema ProblemSchema::from_json(const json& j) {
  try {
    ProblemSchema p;
    const int d = j.at("dims").get<int>();
    const auto& b = j.at("bounds");
    if (d < 1 || !b.is_array() || static_cast<int>(b.size()) != d) throw ConfigError("problem: bounds must list dims intervals");
    std::vector<Interval> bounds;
    for (const auto& iv : b) {
      const double lo = iv.at(0).get<double>(), hi = iv.at(1).get<double>();
      if (!(lo < hi)) throw ConfigError("problem: each bound needs lo < hi");
      bounds.push_back({lo, hi});
    }
    std::vector<std::string> names = j.value("names", std::vector<std::string>{});
    p.config_space = ConfigSpace(bounds, names);
    const auto& f = j.at("fidelities");
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "discrete") {
      p.fidelity_space = FidelitySpace::discrete(f.at("levels").get<std::vector<double>>());
    } else if (kind == "continuous") {
      p.fidelity_space = FidelitySpace::continuous(f.at("min").get<double>());
    } else {
      throw ConfigError("problem: fidelity kind must be discrete or continuous");
    }
    p.num_objectives = j.at("M").get<int>();
    if (p.num_objectives < 1) throw ConfigError("problem: M must be >= 1");
    p.objective_names = j.value("objectives", std::vector<std::string>{});
    p.maximize = j.value("maximize", std::vector<bool>(static_cast<std::size_t>(p.num_objectives), false));
    if (static_cast<int>(p.maximize.size()) != p.num_objectives) throw ConfigError("problem: maximize needs M entries");
    const int q = j.value("Q", 0);
    const auto th = j.value("thresholds", std::vector<double>{});
    const auto dir = j.value("directions", std::vector<std::string>{});
    const auto cn = j.value("constraint_names", std::vector<std::string>{});
    if (static_cast<int>(th.size()) != q || static_cast<int>(dir.size()) != q) {
      throw ConfigError("problem: thresholds and directions need Q entries");
    }
    for (int i = 0; i < q; ++i) {
      Constraint c;
      c.name = i < static_cast<int>(cn.size()) ? cn[static_cast<std::size_t>(i)] : "h" + std::to_string(i);
      c.threshold = th[static_cast<std::size_t>(i)];
      const auto& dd = dir[static_cast<std::size_t>(i)];
      if (dd == ">=") {
        c.direction = ConstraintDirection::kAtLeast;
      } else if (dd == "<=") {
        c.direction = ConstraintDirection::kAtMost;
      } else {
        throw ConfigError("problem: direction must be '>=' or '<='");
      }
      p.constraints.push_back(c);
    }
    p.cost = j.contains("cost") ? cost_from_json(j.at("cost")) : CostModel::exponential(4.8);
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
}

ProblemSchema ProblemSchema::of(const Problem& problem, const CostModel& cost) {
  ProblemSchema p;
  p.config_space = problem.config_space();
  p.fidelity_space = problem.fidelity_space();
  p.num_objectives = problem.num_objectives();
  p.objective_names = problem.objective_names();
  p.maximize = problem.maximize();
  p.constraints = problem.constraints();
  p.cost = cost;
  return p;
}

}  // namespace rescue::runner
