#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtlab/adapter.hpp"
#include "vtlab/config.hpp"
#include "vtlab/event_sim.hpp"
#include "vtlab/hard_instances.hpp"
#include "vtlab/optimizers.hpp"
#include "vtlab/problems.hpp"
#include "vtlab/trace_io.hpp"

namespace vtlab {

struct BuiltProblem {
  ProblemSpec problem;
  std::vector<Estimator> estimators;  // one shared, or one per worker
  Vec x0;
  double sigma2 = 0.0;  // variance bound used by theorem step sizes
};

inline WorkerPool build_pool(const RawConfig& cfg) {
  const std::string rule = cfg.get("pool.tau");
  if (rule == "sqrt_index")
    return sqrt_index_pool(static_cast<int>(cfg.get_int("pool.n")));
  if (rule == "constant")
    return constant_pool(static_cast<int>(cfg.get_int("pool.n")),
                         cfg.get_double("pool.tau_value"));
  if (rule == "list") {
    WorkerPool pool(cfg.get_list("pool.tau_list"));
    if (cfg.has("pool.n") && cfg.get_int("pool.n") != pool.size())
      throw ConfigError("pool.n disagrees with pool.tau_list length");
    return pool;
  }
  throw ConfigError("pool.tau must be sqrt_index, constant or list");
}

inline Vec build_x0(const RawConfig& cfg, int dim) {
  const std::string kind = cfg.get_or("problem.x0", "zero");
  Vec x0(static_cast<std::size_t>(dim), 0.0);
  if (kind == "zero") return x0;
  if (kind == "e1") {
    x0[0] = cfg.get_double_or("problem.x0_scale", 1.0);
    return x0;
  }
  if (kind == "sqrt_d_e1") {
    x0[0] = std::sqrt(static_cast<double>(dim));
    return x0;
  }
  if (kind == "list") {
    const auto vals = cfg.get_list("problem.x0_list");
    if (vals.size() != x0.size())
      throw ConfigError("problem.x0_list length must match the dimension");
    return Vec(vals.begin(), vals.end());
  }
  throw ConfigError("problem.x0 must be zero, e1, sqrt_d_e1 or list");
}

inline BuiltProblem build_problem(const RawConfig& cfg, const WorkerPool& pool) {
  const std::string kind = cfg.get("problem.kind");
  BuiltProblem built;

  auto attach_estimator = [&](const ProblemSpec& p) {
    const std::string ek = cfg.get_or("estimator.kind", "exact");
    if (ek == "exact") {
      built.estimators = {exact_estimator(p)};
      built.sigma2 = 0.0;
    } else if (ek == "gaussian") {
      const double s2 = cfg.get_double("estimator.sigma2");
      built.estimators = {gaussian_estimator(p, s2)};
      built.sigma2 = s2;
    } else if (ek == "bernoulli") {
      built.estimators = {bernoulli_estimator(p, cfg.get_double("estimator.p"))};
      built.sigma2 = cfg.get_double_or("estimator.sigma2", 0.0);
    } else {
      throw ConfigError("estimator.kind must be exact, gaussian or "
                        "bernoulli for this problem");
    }
  };

  if (kind == "quadratic") {
    built.problem = quadratic_problem(static_cast<int>(cfg.get_int("problem.d")));
    built.x0 = build_x0(cfg, built.problem.dim);
    attach_estimator(built.problem);
    return built;
  }

  if (kind == "logreg") {
    const Dataset ds = load_dataset(cfg.get("problem.dataset"));
    const double reg = cfg.get_double_or("problem.reg", 0.0);
    built.problem = logreg_problem(ds, reg);
    built.x0 = build_x0(cfg, built.problem.dim);
    const std::string ek = cfg.get_or("estimator.kind", "minibatch");
    if (ek == "minibatch") {
      const auto batch =
          static_cast<std::size_t>(cfg.get_int_or("estimator.batch", 4));
      built.estimators = {minibatch_estimator(ds, reg, batch)};
      built.sigma2 = built.estimators[0].sigma2;
    } else {
      attach_estimator(built.problem);
    }
    return built;
  }

  if (kind == "ft") {
    const NonconvexHard h = make_nonconvex_hard(
        cfg.get_double("problem.L"), cfg.get_double("problem.delta"),
        cfg.get_double("problem.sigma2"), cfg.get_double("problem.eps"));
    built.problem = h.problem;
    built.estimators = {h.estimator};
    built.sigma2 = cfg.get_double("problem.sigma2");
    built.x0 = build_x0(cfg, built.problem.dim);
    return built;
  }

  if (kind == "convex_hard") {
    const ConvexHard h = make_convex_hard(cfg.get_double("problem.M"),
                                          cfg.get_double("problem.L"),
                                          cfg.get_double("problem.eps"));
    built.problem = h.problem;
    built.x0 = build_x0(cfg, built.problem.dim);
    attach_estimator(built.problem);
    return built;
  }

  if (kind == "heterog_hard") {
    const HeterogHard h = make_heterog_hard(
        pool.size(), cfg.get_double("problem.L"),
        cfg.get_double("problem.delta"), cfg.get_double("problem.sigma2"),
        cfg.get_double("problem.eps"), pool);
    built.problem = h.problem;
    built.estimators = h.estimators;
    built.sigma2 = cfg.get_double("problem.sigma2");
    built.x0 = build_x0(cfg, built.problem.dim);
    return built;
  }

  throw ConfigError("problem.kind must be quadratic, logreg, ft, "
                    "convex_hard or heterog_hard");
}

inline StopRule build_stop(const RawConfig& cfg) {
  StopRule stop;
  if (cfg.has("stop.max_steps"))
    stop.max_steps = static_cast<std::uint64_t>(cfg.get_int("stop.max_steps"));
  if (cfg.has("stop.max_time")) stop.max_time = cfg.get_double("stop.max_time");
  if (cfg.has("stop.metric")) {
    const std::string m = cfg.get("stop.metric");
    if (m == "grad_norm_sq")
      stop.target_metric = Metric::GradNormSq;
    else if (m == "suboptimality")
      stop.target_metric = Metric::Suboptimality;
    else
      throw ConfigError("stop.metric must be grad_norm_sq or suboptimality");
    stop.target_eps = cfg.get_double("stop.eps");
  }
  stop.validate();
  return stop;
}

// Theorem-mode hyperparameters need the problem constants assembled here.
inline Hyperparams theorem_hyperparams(const std::string& method,
                                       const RawConfig& cfg,
                                       const BuiltProblem& built,
                                       const WorkerPool& pool) {
  const double eps = cfg.get_double("method.eps");
  const double L = built.problem.smoothness;
  const double sigma2 = built.sigma2;
  auto delta = [&]() {
    if (cfg.has("problem.delta")) return cfg.get_double("problem.delta");
    return built.problem.gap(built.x0);
  };
  if (method == "rennala") return rennala_hyperparams(eps, sigma2, L, delta());
  if (method == "malenia")
    return malenia_hyperparams(eps, sigma2, L, delta(), pool.size());
  if (method == "minibatch") {
    const int m = cfg.has("method.m")
                      ? static_cast<int>(cfg.get_int("method.m"))
                      : optimal_m(pool, sigma2, eps);
    return m_minibatch_hyperparams(eps, sigma2, L, delta(), m);
  }
  if (method == "convex_rennala") {
    if (!built.problem.lipschitz)
      throw ConfigError("theorem mode for convex_rennala needs a Lipschitz "
                        "constant on the problem");
    const double R = cfg.get_double_or(
        "method.R", built.problem.radius ? *built.problem.radius : 0.0);
    return convex_rennala_hyperparams(eps, sigma2, *built.problem.lipschitz, R);
  }
  if (method == "accel_rennala") {
    const double R = cfg.get_double_or(
        "method.R", built.problem.radius ? *built.problem.radius : 0.0);
    return accel_rennala_hyperparams(eps, sigma2, L, R);
  }
  throw ConfigError("theorem mode does not know method " + method);
}

inline std::unique_ptr<ServerLogic> build_method(const RawConfig& cfg,
                                                 const BuiltProblem& built,
                                                 const WorkerPool& pool) {
  const std::string name = cfg.get("method.name");
  const bool theorem = cfg.get_or("method.mode", "explicit") == "theorem";

  double gamma = 0.0;
  std::uint64_t S = 1;
  int m = pool.size();
  if (theorem) {
    const Hyperparams h = theorem_hyperparams(name, cfg, built, pool);
    gamma = h.gamma;
    S = h.S;
    m = h.m;
  } else {
    gamma = cfg.get_double("method.gamma");
    S = static_cast<std::uint64_t>(cfg.get_int_or("method.S", 1));
    m = static_cast<int>(cfg.get_int_or("method.m", pool.size()));
  }

  if (name == "rennala")
    return std::make_unique<RennalaLogic>(built.x0, gamma, S);
  if (name == "malenia")
    return std::make_unique<MaleniaLogic>(built.x0, gamma, S);
  if (name == "minibatch")
    return std::make_unique<MinibatchLogic>(built.x0, gamma, m);
  if (name == "convex_rennala")
    return std::make_unique<ConvexRennalaLogic>(built.x0, gamma, S);
  if (name == "accel_rennala")
    return std::make_unique<AcceleratedRennalaLogic>(built.x0, gamma, S);
  if (name == "async") {
    const bool adaptive = cfg.get_or("method.adaptive", "false") == "true";
    return std::make_unique<AsyncSgdLogic>(
        built.x0, gamma, adaptive, cfg.get_double_or("method.adaptive_c", 0.25),
        built.problem.smoothness);
  }
  throw ConfigError("method.name must be rennala, malenia, minibatch, "
                    "convex_rennala, accel_rennala or async");
}

struct RunResult {
  std::string run_id;
  std::string method;
  std::uint64_t seed = 0;
  Trace trace;
  double final_f = 0.0;
  double final_gns = 0.0;
  std::optional<VirtualTime> time_to_target;
  bool protocol_mode = false;
};

// trace = steps (default) runs through the simulator; trace = protocol runs
// the same method through the timed protocol with full event recording, so
// the zero-respecting monitor and the success ledger apply.
inline RunResult run_single(const RawConfig& cfg, std::uint64_t seed,
                            const std::string& run_id) {
  const WorkerPool pool = build_pool(cfg);
  const BuiltProblem built = build_problem(cfg, pool);
  const StopRule stop = build_stop(cfg);
  auto logic = build_method(cfg, built, pool);
  const std::string trace_mode = cfg.get_or("trace", "steps");

  RunResult r;
  r.run_id = run_id;
  r.method = cfg.get("method.name");
  r.seed = seed;
  if (trace_mode == "protocol") {
    r.protocol_mode = true;
    ServerAdapter adapter(*logic, pool,
                          stop.max_steps ? *stop.max_steps : ~0ull);
    StopRule proto_stop;
    proto_stop.max_steps = static_cast<std::uint64_t>(
        cfg.get_int_or("trace.max_events", 200000));
    proto_stop.max_time = stop.max_time;
    proto_stop.target_metric = stop.target_metric;
    proto_stop.target_eps = stop.target_eps;
    r.trace = run_time_protocol(adapter, pool, built.estimators, built.problem,
                                OracleKind::Delayed, proto_stop, seed,
                                TraceLevel::Full);
    if (!r.trace.events.empty()) {
      r.final_f = r.trace.events.back().f;
      r.final_gns = r.trace.events.back().grad_norm_sq;
    }
  } else if (trace_mode == "steps") {
    r.trace =
        des_run(*logic, pool, built.estimators, built.problem, stop, seed);
    const auto& steps = r.trace.steps;
    r.final_f = steps.empty() ? 0.0 : steps.back().f;
    r.final_gns = steps.empty() ? 0.0 : steps.back().grad_norm_sq;
  } else {
    throw ConfigError("trace must be steps or protocol");
  }
  if (stop.target_metric) {
    r.time_to_target = measure_time_to_epsilon(
        r.trace, *stop.target_metric, stop.target_eps, built.problem.f_star);
  }
  return r;
}

inline std::vector<std::uint64_t> config_seeds(const RawConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  if (!cfg.has("seeds")) return {1};
  for (double v : cfg.get_list("seeds"))
    seeds.push_back(static_cast<std::uint64_t>(v));
  return seeds;
}

// A config may name several methods and pool sizes at once:
//   method.name = rennala,async       pool.n = 100,1000
// Per-method parameters live under the method's own prefix (rennala.S = ...)
// and are copied onto method.* for each expanded run.
inline std::vector<RawConfig> expand_config(const RawConfig& cfg) {
  std::vector<std::string> methods;
  {
    std::istringstream ss(cfg.get("method.name"));
    std::string name;
    while (std::getline(ss, name, ',')) methods.push_back(name);
  }
  std::vector<std::string> pool_sizes = {""};
  if (cfg.has("pool.n")) {
    pool_sizes.clear();
    std::istringstream ss(cfg.get("pool.n"));
    std::string n;
    while (std::getline(ss, n, ',')) pool_sizes.push_back(n);
  }
  if ((methods.size() > 1 || pool_sizes.size() > 1) &&
      cfg.get_or("pool.tau", "") == "list")
    throw ConfigError("explicit pool.tau_list cannot be combined with "
                      "multiple methods or pool sizes");

  std::vector<RawConfig> expanded;
  for (const auto& method : methods) {
    for (const auto& n : pool_sizes) {
      RawConfig one = cfg;
      one.values["method.name"] = method;
      if (!n.empty()) one.values["pool.n"] = n;
      const std::string prefix = method + ".";
      for (const auto& [key, value] : cfg.values) {
        if (key.rfind(prefix, 0) == 0)
          one.values["method." + key.substr(prefix.size())] = value;
      }
      expanded.push_back(std::move(one));
    }
  }
  return expanded;
}

// Executes the configured runs over all seeds, emits one CSV per run and an
// aggregate summary embedding the config hash.
inline nlohmann::json cli_run(const RawConfig& cfg,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  nlohmann::json summary;
  summary["config_hash"] = cfg.hash();
  summary["config"] = cfg.values;
  summary["runs"] = nlohmann::json::array();

  const auto seeds = config_seeds(cfg);
  int index = 0;
  for (const RawConfig& one : expand_config(cfg)) {
    for (const auto seed : seeds) {
      char id[32];
      std::snprintf(id, sizeof(id), "r%04d", index++);
      const RunResult r = run_single(one, seed, id);
      const int n = build_pool(one).size();

      const fs::path csv_path = fs::path(out_dir) / (r.run_id + ".csv");
      std::ofstream csv(csv_path);
      if (!csv) throw ConfigError("cannot write " + csv_path.string());
      write_run_csv(r.run_id, r.method, n, seed, r.trace, csv);

      nlohmann::json jr;
      if (r.protocol_mode) {
        const fs::path events_path =
            fs::path(out_dir) / (r.run_id + "_events.csv");
        std::ofstream events(events_path);
        write_protocol_csv(r.trace, events);
        jr["events_csv"] = events_path.string();
        jr["zero_respecting_violations"] =
            check_zero_respecting(r.trace).size();
        // the success ledger applies to runs on the coin-oracle instance
        if (one.get("problem.kind") == "ft") {
          const SuccessLedger ledger = success_ledger(r.trace, build_pool(one));
          const fs::path ledger_path =
              fs::path(out_dir) / (r.run_id + "_ledger.json");
          std::ofstream lf(ledger_path);
          lf << ledger_to_json(ledger).dump(2) << '\n';
          jr["ledger_json"] = ledger_path.string();
          jr["ledger_holds"] =
              ledger.counting_bound_holds && ledger.prog_within_successes;
        }
      }
      jr["run_id"] = r.run_id;
      jr["method"] = r.method;
      jr["n"] = n;
      jr["seed"] = seed;
      jr["csv"] = csv_path.string();
      jr["final_f"] = r.final_f;
      jr["final_grad_norm_sq"] = r.final_gns;
      jr["steps"] = r.trace.steps.empty() ? 0 : r.trace.steps.back().k;
      jr["deliveries"] = r.trace.deliveries;
      if (r.time_to_target)
        jr["time_to_target"] = *r.time_to_target;
      else
        jr["time_to_target"] = nullptr;
      summary["runs"].push_back(jr);
    }
  }

  std::ofstream out(fs::path(out_dir) / "summary.json");
  out << summary.dump(2) << '\n';
  return summary;
}

// Grid sweep over step sizes and batch sizes; best by the configured
// objective (smallest time to target, then final value as tie-breaker).
inline nlohmann::json cli_sweep(const RawConfig& cfg,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  // default grids: step sizes 2^i for i in [-20, 20], the usual batch ladder
  std::vector<double> gamma_grid;
  if (cfg.has("sweep.gamma_grid")) {
    gamma_grid = cfg.get_list("sweep.gamma_grid");
  } else {
    for (int i = -20; i <= 20; ++i) gamma_grid.push_back(std::ldexp(1.0, i));
  }
  std::vector<double> s_grid = {1,  5,   10,  20,  40,
                                80, 100, 200, 500, 1000};
  if (cfg.has("sweep.S_grid")) s_grid = cfg.get_list("sweep.S_grid");
  if (!cfg.has("sweep.S_grid") &&
      cfg.get("method.name") != "rennala" &&
      cfg.get("method.name") != "convex_rennala" &&
      cfg.get("method.name") != "accel_rennala" &&
      cfg.get("method.name") != "malenia")
    s_grid = {static_cast<double>(cfg.get_int_or("method.S", 1))};
  const std::string objective = cfg.get_or("sweep.objective", "final_f");
  if (objective != "final_f" && objective != "time_to_target")
    throw ConfigError("sweep.objective must be final_f or time_to_target");
  if (objective == "time_to_target" && !cfg.has("stop.metric"))
    throw ConfigError("sweep.objective = time_to_target needs stop.metric");

  nlohmann::json report;
  report["config_hash"] = cfg.hash();
  report["objective"] = objective;
  report["candidates"] = nlohmann::json::array();

  const auto seeds = config_seeds(cfg);
  double best_score = std::numeric_limits<double>::infinity();
  nlohmann::json best;

  for (double gamma : gamma_grid) {
    for (double s : s_grid) {
      RawConfig point = cfg;
      point.values["method.mode"] = "explicit";
      point.values["method.gamma"] = detail::fmt_double(gamma);
      point.values["method.S"] =
          std::to_string(static_cast<std::int64_t>(s));

      double score_acc = 0.0;
      bool reached = true;
      for (const auto seed : seeds) {
        const RunResult r = run_single(point, seed, "sweep");
        if (objective == "final_f") {
          score_acc += r.final_f;
        } else if (r.time_to_target) {
          score_acc += *r.time_to_target;
        } else {
          reached = false;
        }
      }
      const double score = reached
                               ? score_acc / static_cast<double>(seeds.size())
                               : std::numeric_limits<double>::infinity();

      nlohmann::json cand;
      cand["gamma"] = gamma;
      cand["S"] = static_cast<std::int64_t>(s);
      cand["score"] = std::isfinite(score) ? nlohmann::json(score)
                                           : nlohmann::json(nullptr);
      report["candidates"].push_back(cand);
      if (score < best_score) {
        best_score = score;
        best = cand;
        best["boundary"] =
            (gamma == gamma_grid.front() || gamma == gamma_grid.back()) &&
            gamma_grid.size() > 1;
      }
    }
  }
  if (best.is_null())
    throw ConfigError("sweep: no candidate reached the objective");
  report["best"] = best;

  std::ofstream out(fs::path(out_dir) / "sweep.json");
  out << report.dump(2) << '\n';
  return report;
}

}  // namespace vtlab
