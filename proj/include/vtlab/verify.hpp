#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vtlab/adapter.hpp"
#include "vtlab/complexity.hpp"
#include "vtlab/config.hpp"
#include "vtlab/event_sim.hpp"
#include "vtlab/hard_instances.hpp"
#include "vtlab/runner.hpp"

namespace vtlab {

struct CheckResult {
  std::string id;
  std::string name;
  bool pass = false;
  std::string details;
  double seconds = 0.0;
};

namespace verify_detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Separable Huber objective: exactly 1-Lipschitz, 1-smooth, convex, with the
// minimum 0 at the origin. The convex prescriptions are exercised on it.
inline ProblemSpec huber_problem(int d) {
  ProblemSpec p;
  p.dim = d;
  p.value = [](const Vec& x) {
    double v = 0.0;
    for (double t : x)
      v += std::abs(t) <= 1.0 ? 0.5 * t * t : std::abs(t) - 0.5;
    return v;
  };
  p.grad_into = [](const Vec& x, Vec& g) {
    g.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      g[i] = std::clamp(x[i], -1.0, 1.0);
  };
  p.smoothness = 1.0;
  p.lipschitz = 1.0;
  p.f_star = 0.0;
  return p;
}

// Random point with a prescribed progress index.
inline Vec point_with_prog(RngStream& rng, int dim, int level, double spread) {
  Vec x(static_cast<std::size_t>(dim), 0.0);
  for (int j = 0; j < level; ++j)
    x[static_cast<std::size_t>(j)] = spread * rng.next_normal();
  if (level > 0 && x[static_cast<std::size_t>(level - 1)] == 0.0)
    x[static_cast<std::size_t>(level - 1)] = spread;
  return x;
}

// First K' such that the running mean of the sequence head is <= eps.
inline std::int64_t first_running_mean_below(const std::vector<double>& vals,
                                             double eps) {
  double sum = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    sum += vals[k];
    if (sum / static_cast<double>(k + 1) <= eps)
      return static_cast<std::int64_t>(k + 1);
  }
  return -1;
}

}  // namespace verify_detail

// --- criterion 1: chain-instance invariants ------------------------------------

inline CheckResult check_hard_instance_invariants() {
  CheckResult r{"c1", "hard-instance invariants", true, "", 0.0};
  std::ostringstream details;
  const int T = 10;
  RngStream rng{1001};
  const double f0 = ft_value(Vec(T, 0.0));

  double worst_gap = -1e300, worst_sup = 0.0, worst_smooth = 0.0;
  double min_partial_grad = 1e300;
  bool zero_chain_ok = true;
  for (int t = 0; t < 1000; ++t) {
    Vec x(T), y(T);
    for (double& v : x) v = 2.0 * rng.next_normal();
    for (double& v : y) v = 2.0 * rng.next_normal();
    worst_gap = std::max(worst_gap, f0 - ft_value(x));
    worst_sup = std::max(worst_sup, norm_inf(ft_grad(x)));
    const double dxy = dist(x, y);
    if (dxy > 1e-12)
      worst_smooth = std::max(worst_smooth, dist(ft_grad(x), ft_grad(y)) / dxy);

    const int level = static_cast<int>(rng.next_index(T));
    const Vec z = verify_detail::point_with_prog(rng, T, level, 1.3);
    if (prog(ft_grad(z)) > prog(z) + 1) zero_chain_ok = false;
    if (prog(z) < T)
      min_partial_grad = std::min(min_partial_grad, norm(ft_grad(z)));
  }

  const bool gap_ok = worst_gap <= kChainGapPerLevel * T;
  const bool sup_ok = worst_sup <= kChainGradSup;
  const bool smooth_ok = worst_smooth <= kChainSmoothness;
  const bool large_ok = min_partial_grad > 1.0;
  r.pass = gap_ok && sup_ok && smooth_ok && large_ok && zero_chain_ok;
  details << "gap<=" << kChainGapPerLevel * T << ": "
          << verify_detail::fmt(worst_gap) << "; sup<=23: "
          << verify_detail::fmt(worst_sup) << "; smooth<=152: "
          << verify_detail::fmt(worst_smooth) << "; zero-chain: "
          << (zero_chain_ok ? "ok" : "violated")
          << "; min partial-progress grad norm: "
          << verify_detail::fmt(min_partial_grad);
  r.details = details.str();
  return r;
}

// --- criterion 2: coin estimator exactness --------------------------------------

inline CheckResult check_estimator_exactness() {
  CheckResult r{"c2", "coin estimator moments", true, "", 0.0};
  std::ostringstream details;
  RngStream rng{2002};
  int enumerated_ok = 0, mc_ok = 0;
  const int instances = 50;
  const std::uint64_t mc_draws = 100000;

  for (int i = 0; i < instances; ++i) {
    const double L = 0.5 + rng.next_unit();
    const double eps = 0.002 + 0.002 * rng.next_unit();
    const double sigma2 = 1.0 + 8.0 * rng.next_unit();
    const double delta = 2.0 * eps * 152.0 * 12.0 * (3.0 + rng.next_index(8)) / L;
    const NonconvexHard h = make_nonconvex_hard(L, delta, sigma2, eps);

    const int level = static_cast<int>(rng.next_index(h.T));
    const Vec x = verify_detail::point_with_prog(rng, h.T, level, h.lambda);
    const Vec g = h.problem.grad(x);
    const auto [mean, second] = bernoulli_exact_moments(g, h.p, prog(x));

    const bool unbiased = dist(mean, g) <= 1e-12 * (1.0 + norm(g));
    const double sup = norm_inf(g);
    const bool bounded = second <= sup * sup * (1.0 - h.p) / h.p + 1e-12 &&
                         second <= sigma2 + 1e-12;
    if (unbiased && bounded) ++enumerated_ok;

    // Monte-Carlo second moment against the enumerated value, three sigmas
    // of the empirical-mean deviation
    const auto [mc_mean, mc_second] =
        estimator_moments(h.estimator, x, mc_draws,
                          static_cast<std::uint64_t>(9000 + i));
    const double a = (1.0 - h.p) / h.p;
    double var = 0.0;
    {
      // the squared deviation takes one of two values; its variance is exact
      double v1 = 0.0, v0 = 0.0;
      for (std::size_t j = static_cast<std::size_t>(prog(x)); j < g.size(); ++j) {
        v1 += g[j] * g[j];
      }
      v0 = v1;           // failure outcome: deviation ||g_beyond||^2
      v1 *= a * a;       // success outcome: scaled by ((1-p)/p)^2
      const double mu = h.p * v1 + (1.0 - h.p) * v0;
      var = h.p * (v1 - mu) * (v1 - mu) + (1.0 - h.p) * (v0 - mu) * (v0 - mu);
    }
    const double sd = std::sqrt(var / static_cast<double>(mc_draws));
    if (std::abs(mc_second - second) <= 3.0 * sd + 1e-12) ++mc_ok;
    (void)mc_mean;
  }

  r.pass = enumerated_ok == instances && mc_ok == instances;
  details << "enumerated moments ok on " << enumerated_ok << "/" << instances
          << "; monte-carlo within 3 sigmas on " << mc_ok << "/" << instances;
  r.details = details.str();
  return r;
}

// --- criterion 3: prescribed-parameter convergence -------------------------------

inline CheckResult check_theorem_convergence() {
  CheckResult r{"c3", "prescribed-parameter convergence", true, "", 0.0};
  std::ostringstream details;
  const int n_seeds = 10;

  auto averaged_runs = [&](auto make_logic, const WorkerPool& pool,
                           const std::vector<Estimator>& est,
                           const ProblemSpec& problem, std::uint64_t K,
                           bool use_gns) {
    std::vector<double> acc(static_cast<std::size_t>(K) + 1, 0.0);
    for (int seed = 1; seed <= n_seeds; ++seed) {
      auto logic = make_logic();
      StopRule stop;
      stop.max_steps = K;
      const Trace t = des_run(*logic, pool, est, problem, stop,
                              static_cast<std::uint64_t>(seed));
      for (std::size_t k = 0; k < t.steps.size() && k < acc.size(); ++k)
        acc[k] += use_gns ? t.steps[k].grad_norm_sq : t.steps[k].f;
    }
    for (double& v : acc) v /= static_cast<double>(n_seeds);
    return acc;
  };

  // nonconvex homogeneous prescription on the d=100 quadratic
  {
    const ProblemSpec p = quadratic_problem(100);
    Vec x0(100, 0.0);
    x0[0] = 10.0;
    const double eps = 0.05, sigma2 = 1.0;
    const double delta = p.gap(x0);
    const Hyperparams h = rennala_hyperparams(eps, sigma2, p.smoothness, delta);
    const auto mean_gns = averaged_runs(
        [&]() {
          return std::make_unique<RennalaLogic>(x0, h.gamma, h.S);
        },
        WorkerPool({1.0, 2.0}), {gaussian_estimator(p, sigma2)}, p, h.K, true);
    const auto hit = verify_detail::first_running_mean_below(
        std::vector<double>(mean_gns.begin(), mean_gns.end() - 1), eps);
    const bool ok = hit >= 1 && hit <= static_cast<std::int64_t>(h.K);
    r.pass = r.pass && ok;
    details << "rennala: mean-grad-sq<=eps at K'=" << hit << " (budget "
            << h.K << "); ";
  }

  // heterogeneous prescription on four coupled quadratics
  {
    const int d = 20, n = 4;
    const ProblemSpec base = quadratic_problem(d);
    std::vector<ProblemSpec> local(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      ProblemSpec& f = local[static_cast<std::size_t>(i)];
      f.dim = d;
      f.smoothness = base.smoothness;
      const std::size_t shift = static_cast<std::size_t>(i);
      f.value = [base, shift](const Vec& x) {
        return base.value(x) - 0.25 * x[shift];
      };
      f.grad_into = [base, shift](const Vec& x, Vec& g) {
        base.grad_into(x, g);
        g[shift] -= 0.25;
      };
    }
    ProblemSpec avg;
    avg.dim = d;
    avg.smoothness = base.smoothness;
    avg.value = [local, n](const Vec& x) {
      double v = 0.0;
      for (const auto& f : local) v += f.value(x);
      return v / n;
    };
    avg.grad_into = [local, n](const Vec& x, Vec& g) {
      g.assign(x.size(), 0.0);
      Vec gi(x.size());
      for (const auto& f : local) {
        f.grad_into(x, gi);
        axpy(1.0 / n, gi, g);
      }
    };
    // exact minimum of the averaged quadratic via its linear term
    {
      Vec b(static_cast<std::size_t>(d), 0.0);
      b[0] = -0.25;
      for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] += 0.25 / n;
      const Vec xs = detail::solve_tridiag_const(d, 0.5, -0.25, b);
      avg.f_star = -0.5 * dot(b, xs);
    }

    Vec x0(static_cast<std::size_t>(d), 0.0);
    x0[0] = 2.0;
    const double eps = 0.05, sigma2 = 1.0;
    const Hyperparams h =
        malenia_hyperparams(eps, sigma2, avg.smoothness, avg.gap(x0), n);
    std::vector<Estimator> est;
    for (int i = 0; i < n; ++i)
      est.push_back(
          gaussian_estimator(local[static_cast<std::size_t>(i)], sigma2));
    const auto mean_gns = averaged_runs(
        [&]() {
          return std::make_unique<MaleniaLogic>(x0, h.gamma, h.S);
        },
        WorkerPool({1.0, 1.5, 2.0, 3.0}), est, avg, h.K, true);
    const auto hit = verify_detail::first_running_mean_below(
        std::vector<double>(mean_gns.begin(), mean_gns.end() - 1), eps);
    const bool ok = hit >= 1 && hit <= static_cast<std::int64_t>(h.K);
    r.pass = r.pass && ok;
    details << "malenia: K'=" << hit << " (budget " << h.K << "); ";
  }

  // convex averaged-iterate prescription on the Huber objective
  {
    const ProblemSpec p = verify_detail::huber_problem(10);
    Vec x0(10, 0.0);
    x0[0] = 1.0;  // radius 1
    const double eps = 0.1, sigma2 = 1.0;
    const Hyperparams h = convex_rennala_hyperparams(eps, sigma2, 1.0, 1.0);
    const auto mean_f = averaged_runs(
        [&]() {
          return std::make_unique<ConvexRennalaLogic>(x0, h.gamma, h.S);
        },
        WorkerPool({1.0, 1.7}), {gaussian_estimator(p, sigma2)}, p, h.K,
        false);
    // the recorded metric already tracks the averaged iterate
    std::int64_t hit = -1;
    for (std::size_t k = 0; k < mean_f.size(); ++k) {
      if (mean_f[k] <= eps) {
        hit = static_cast<std::int64_t>(k);
        break;
      }
    }
    const bool ok = hit >= 0 && hit <= static_cast<std::int64_t>(h.K);
    r.pass = r.pass && ok;
    details << "convex rennala: averaged f<=eps at K'=" << hit << " (budget "
            << h.K << "); ";
  }

  // accelerated prescription on the same objective
  {
    const ProblemSpec p = verify_detail::huber_problem(10);
    Vec x0(10, 0.0);
    x0[0] = 1.0;
    const double eps = 0.1, sigma2 = 1.0;
    const Hyperparams h = accel_rennala_hyperparams(eps, sigma2, 1.0, 1.0);
    const auto mean_f = averaged_runs(
        [&]() {
          return std::make_unique<AcceleratedRennalaLogic>(x0, h.gamma, h.S);
        },
        WorkerPool({1.0, 1.7}), {gaussian_estimator(p, sigma2)}, p, h.K,
        false);
    std::int64_t hit = -1;
    for (std::size_t k = 0; k < mean_f.size(); ++k) {
      if (mean_f[k] <= eps) {
        hit = static_cast<std::int64_t>(k);
        break;
      }
    }
    const bool ok = hit >= 0 && hit <= static_cast<std::int64_t>(h.K);
    r.pass = r.pass && ok;
    details << "accelerated: f<=eps at K'=" << hit << " (budget " << h.K
            << "); ";
  }

  // synchronized-start prescription
  {
    const ProblemSpec p = quadratic_problem(20);
    Vec x0(20, 0.0);
    x0[0] = 1.0;
    const double eps = 0.05, sigma2 = 1.0;
    const WorkerPool pool({1.0, 1.0, 1.0, 1.0});
    const int m = optimal_m(pool, sigma2, eps);
    const Hyperparams h =
        m_minibatch_hyperparams(eps, sigma2, p.smoothness, p.gap(x0), m);
    const auto mean_gns = averaged_runs(
        [&]() {
          return std::make_unique<MinibatchLogic>(x0, h.gamma, h.m);
        },
        pool, {gaussian_estimator(p, sigma2)}, p, h.K, true);
    const auto hit = verify_detail::first_running_mean_below(
        std::vector<double>(mean_gns.begin(), mean_gns.end() - 1), eps);
    const bool ok = hit >= 1 && hit <= static_cast<std::int64_t>(h.K);
    r.pass = r.pass && ok;
    details << "m-minibatch (m=" << m << "): K'=" << hit << " (budget " << h.K
            << ")";
  }

  r.details = details.str();
  return r;
}

// --- criterion 4: collection-time sandwich ---------------------------------------

inline CheckResult check_collection_sandwich() {
  CheckResult r{"c4", "collection-time sandwich", true, "", 0.0};
  RngStream rng{4004};
  int failures = 0;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_index(32));
    std::vector<double> taus;
    for (int i = 0; i < n; ++i)
      taus.push_back(0.05 + 10.0 * rng.next_unit() * rng.next_unit());
    const WorkerPool pool(taus);
    const std::uint64_t S = 1 + rng.next_index(1000);

    double inv = 0.0;
    for (double tau : pool.delays) inv += 1.0 / tau;

    const double worst =
        measure_collection_time(pool, S, CollectionRegime::WorstCase);
    const double fresh =
        measure_collection_time(pool, S, CollectionRegime::Fresh);
    const auto [tp, j] = t_prime_min(pool.delays, static_cast<double>(S));
    (void)j;

    const bool ok = fresh <= worst + 1e-9 &&
                    worst >= static_cast<double>(S) / inv - 1e-9 &&
                    worst <= 2.0 * tp + 1e-9;
    if (!ok) ++failures;
  }
  r.pass = failures == 0;
  r.details = std::to_string(trials) + " pools fuzzed, " +
              std::to_string(failures) + " sandwich failures";
  return r;
}

// --- criterion 5: threshold-lemma fuzzing ----------------------------------------

inline CheckResult check_lemma_fuzz() {
  CheckResult r{"c5", "threshold-lemma fuzzing", true, "", 0.0};
  RngStream rng{5005};
  int tau_failures = 0, sync_failures = 0;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_index(32));
    std::vector<double> taus;
    for (int i = 0; i < n; ++i)
      taus.push_back(0.02 + 12.0 * rng.next_unit() * rng.next_unit());
    std::sort(taus.begin(), taus.end());
    const double S = 0.25 + 800.0 * rng.next_unit() * rng.next_unit();
    if (!lemma_tau_check(taus, S).holds) ++tau_failures;
    const int eta = 1 + static_cast<int>(rng.next_index(n));
    if (!lemma_tau_sync_check(taus, eta).holds) ++sync_failures;
  }
  r.pass = tau_failures == 0 && sync_failures == 0;
  r.details = std::to_string(trials) + " draws each; asynchronous-form "
              "failures: " + std::to_string(tau_failures) +
              ", synchronized-form failures: " + std::to_string(sync_failures);
  return r;
}

// --- criterion 6: method ordering on the scaled experiment -----------------------

struct OrderingParams {
  int d = 200;
  double p = 0.01;
  double f_target_gap = 1.0;  // target: f <= f* + this
  // frozen per-pool-size settings, grid-tuned once on this experiment
  double rennala_gamma = 1.2;
  std::uint64_t rennala_S_large = 300;  // n = 10000
  std::uint64_t rennala_S_small = 20;   // n = 100
  double async_gamma_base = 1.0;  // capped by the delay-adaptive rule
  double minibatch_gamma = 1.0;
  double horizon = 5.0e3;
  int n_seeds = 3;
};

inline CheckResult check_figure_ordering(const OrderingParams& params = {}) {
  CheckResult r{"c6", "method ordering on square-root delays", true, "", 0.0};
  std::ostringstream details;

  const ProblemSpec p = quadratic_problem(params.d);
  Vec x0(static_cast<std::size_t>(params.d), 0.0);
  x0[0] = std::sqrt(static_cast<double>(params.d));
  const Estimator est = bernoulli_estimator(p, params.p);
  const double eps_target = params.f_target_gap;

  // seed-averaged time to target
  auto time_to_target = [&](auto make_logic, const WorkerPool& pool) {
    double total = 0.0;
    for (int seed = 1; seed <= params.n_seeds; ++seed) {
      auto logic = make_logic();
      StopRule stop;
      stop.max_time = params.horizon;
      stop.max_steps = 100000000ull;
      stop.target_metric = Metric::Suboptimality;
      stop.target_eps = eps_target;
      const Trace t = des_run(*logic, pool, {est}, p, stop,
                              static_cast<std::uint64_t>(seed));
      const auto hit = measure_time_to_epsilon(t, Metric::Suboptimality,
                                               eps_target, p.f_star);
      if (!hit) return std::numeric_limits<double>::infinity();
      total += *hit;
    }
    return total / static_cast<double>(params.n_seeds);
  };

  // large pool: the asynchronous step collapses with the delay, the
  // synchronized rounds pay the slowest worker
  {
    const WorkerPool pool = sqrt_index_pool(10000);
    const double t_renn = time_to_target(
        [&]() {
          return std::make_unique<RennalaLogic>(x0, params.rennala_gamma,
                                                params.rennala_S_large);
        },
        pool);
    const double t_async = time_to_target(
        [&]() {
          return std::make_unique<AsyncSgdLogic>(x0, params.async_gamma_base,
                                                 true, 0.25, p.smoothness);
        },
        pool);
    const double t_mini = time_to_target(
        [&]() {
          return std::make_unique<MinibatchLogic>(x0, params.minibatch_gamma,
                                                  pool.size());
        },
        pool);
    const bool ok =
        t_renn <= t_async && t_async <= t_mini && std::isfinite(t_renn);
    r.pass = r.pass && ok;
    details << "n=10000: rennala " << verify_detail::fmt(t_renn) << " <= async "
            << verify_detail::fmt(t_async) << " <= minibatch "
            << verify_detail::fmt(t_mini) << (ok ? " (ok)" : " (violated)")
            << "; ";
  }

  // small pool: the two asynchronous-capable methods track each other
  {
    const WorkerPool pool = sqrt_index_pool(100);
    const double t_renn = time_to_target(
        [&]() {
          return std::make_unique<RennalaLogic>(x0, params.rennala_gamma,
                                                params.rennala_S_small);
        },
        pool);
    const double t_async = time_to_target(
        [&]() {
          return std::make_unique<AsyncSgdLogic>(x0, params.async_gamma_base,
                                                 true, 0.25, p.smoothness);
        },
        pool);
    const double ratio = std::max(t_renn, t_async) / std::min(t_renn, t_async);
    const bool ok = std::isfinite(ratio) && ratio <= 1.5;
    r.pass = r.pass && ok;
    details << "n=100: rennala " << verify_detail::fmt(t_renn) << " vs async "
            << verify_detail::fmt(t_async) << ", ratio "
            << verify_detail::fmt(ratio) << (ok ? " (ok)" : " (violated)");
  }

  r.details = details.str();
  return r;
}

// --- criterion 7: lower-bound counting mechanics ----------------------------------

inline CheckResult check_lower_bound_mechanics() {
  CheckResult r{"c7", "lower-bound counting mechanics", true, "", 0.0};
  std::ostringstream details;

  const double L = 1.0, eps = 1e-3;
  const double sigma2 = 2.0 * eps * 529.0 / 0.3;  // coin probability ~0.3
  const double delta = 2.0 * eps * 152.0 * 12.0 * 9.0;  // nine levels
  const NonconvexHard h = make_nonconvex_hard(L, delta, sigma2, eps);
  const WorkerPool pool({1.0, 1.4, 2.5});

  int ledger_ok = 0, zr_ok = 0, levels_total = 0;
  const int runs = 100;
  for (int seed = 1; seed <= runs; ++seed) {
    RennalaLogic logic(Vec(h.T, 0.0), 60.0, 4);
    ServerAdapter adapter(logic, pool, 200);
    StopRule stop;
    stop.max_steps = 3000;
    const Trace t =
        run_time_protocol(adapter, pool, {h.estimator}, h.problem,
                          OracleKind::Delayed, stop,
                          static_cast<std::uint64_t>(seed));
    const SuccessLedger ledger = success_ledger(t, pool);
    if (ledger.counting_bound_holds && ledger.prog_within_successes)
      ++ledger_ok;
    if (check_zero_respecting(t).empty()) ++zr_ok;
    levels_total += static_cast<int>(ledger.levels.size());
  }

  // every shipped method stays zero-respecting on the instance
  int methods_ok = 0;
  const int n_methods = 5;
  for (int which = 0; which < n_methods; ++which) {
    std::unique_ptr<ServerLogic> logic;
    const Vec x0(h.T, 0.0);
    switch (which) {
      case 0: logic = std::make_unique<RennalaLogic>(x0, 30.0, 3); break;
      case 1: logic = std::make_unique<MaleniaLogic>(x0, 30.0, 3); break;
      case 2: logic = std::make_unique<MinibatchLogic>(x0, 30.0, 2); break;
      case 3: logic = std::make_unique<AsyncSgdLogic>(x0, 10.0); break;
      case 4:
        logic = std::make_unique<AcceleratedRennalaLogic>(x0, 10.0, 3);
        break;
    }
    ServerAdapter adapter(*logic, pool, 60);
    StopRule stop;
    stop.max_steps = 2000;
    const Trace t =
        run_time_protocol(adapter, pool, {h.estimator}, h.problem,
                          OracleKind::Delayed, stop, 42);
    if (check_zero_respecting(t).empty()) ++methods_ok;
  }

  r.pass = ledger_ok == runs && zr_ok == runs && methods_ok == n_methods &&
           levels_total > 0;
  details << "ledger bound held on " << ledger_ok << "/" << runs
          << " runs (levels reached in total: " << levels_total
          << "); zero-respecting on " << zr_ok << "/" << runs
          << " runs and " << methods_ok << "/" << n_methods << " methods";
  r.details = details.str();
  return r;
}

// --- criterion 8: growth of the bound ratio ---------------------------------------

inline CheckResult check_graph_oracle_trend() {
  CheckResult r{"c8", "bound-ratio growth on square-root delays", true, "", 0.0};
  auto ratio = [](int n) {
    std::vector<double> taus;
    for (int i = 1; i <= n; ++i) taus.push_back(std::sqrt(i));
    const ConvexBounds b =
        convex_bounds(taus, 1.0, 1e9, 1.0, std::sqrt(n), 1.0);
    return b.lower / b.graph_oracle;
  };
  const double r16 = ratio(16), r256 = ratio(256), r4096 = ratio(4096);
  const double g1 = r256 / r16, g2 = r4096 / r256;
  r.pass = g1 >= 1.7 && g2 >= 1.7;
  r.details = "ratios " + verify_detail::fmt(r16) + " -> " +
              verify_detail::fmt(r256) + " -> " + verify_detail::fmt(r4096) +
              "; growth factors " + verify_detail::fmt(g1) + ", " +
              verify_detail::fmt(g2) + " (need >= 1.7)";
  return r;
}

// --- criterion 9: byte-identical reruns --------------------------------------------

inline CheckResult check_determinism() {
  CheckResult r{"c9", "byte-identical reruns", true, "", 0.0};
  RawConfig cfg;
  cfg.values["problem.kind"] = "quadratic";
  cfg.values["problem.d"] = "30";
  cfg.values["problem.x0"] = "e1";
  cfg.values["estimator.kind"] = "gaussian";
  cfg.values["estimator.sigma2"] = "1.0";
  cfg.values["pool.n"] = "3";
  cfg.values["pool.tau"] = "sqrt_index";
  cfg.values["method.name"] = "rennala,async";
  cfg.values["rennala.gamma"] = "0.4";
  cfg.values["rennala.S"] = "5";
  cfg.values["async.gamma"] = "0.05";
  cfg.values["stop.max_steps"] = "60";
  cfg.values["seeds"] = "7,8";

  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "vtlab_determinism";
  std::error_code ec;
  fs::remove_all(base, ec);
  cli_run(cfg, (base / "a").string());
  cli_run(cfg, (base / "b").string());

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  std::size_t files = 0, bytes = 0;
  bool identical = true;
  for (const auto& entry : fs::directory_iterator(base / "a")) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    const std::string a = slurp(entry.path());
    const std::string b = slurp(base / "b" / entry.path().filename());
    bytes += a.size();
    identical = identical && !a.empty() && a == b;
  }
  r.pass = identical && files == 4;  // 2 methods x 2 seeds
  r.details = std::to_string(files) + " csv files, " + std::to_string(bytes) +
              " bytes, " + (identical ? "identical" : "DIFFERENT");
  fs::remove_all(base, ec);
  return r;
}

// --- driver -------------------------------------------------------------------------

inline std::vector<CheckResult> run_verification(const std::string& only = "") {
  struct Entry {
    const char* id;
    const char* name;
    std::function<CheckResult()> fn;
  };
  const std::vector<Entry> checks = {
      {"c1", "hard-instance invariants", check_hard_instance_invariants},
      {"c2", "coin estimator moments", check_estimator_exactness},
      {"c3", "prescribed-parameter convergence", check_theorem_convergence},
      {"c4", "collection-time sandwich", check_collection_sandwich},
      {"c5", "threshold-lemma fuzzing", check_lemma_fuzz},
      {"c6", "method ordering on square-root delays",
       []() { return check_figure_ordering(); }},
      {"c7", "lower-bound counting mechanics", check_lower_bound_mechanics},
      {"c8", "bound-ratio growth on square-root delays",
       check_graph_oracle_trend},
      {"c9", "byte-identical reruns", check_determinism},
  };
  std::vector<CheckResult> results;
  for (const auto& entry : checks) {
    if (!only.empty() &&
        std::string(entry.id).find(only) == std::string::npos &&
        std::string(entry.name).find(only) == std::string::npos)
      continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult res = entry.fn();
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace vtlab
