#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vtlab/core.hpp"

namespace vtlab {

// Server-side method state machine. The executor (simulator or protocol
// adapter) owns the workers; the logic reacts to reports and hands out
// assignments through the sink. Assignments carry the iteration tag the
// staleness filters compare against.
struct ServerLogic {
  struct Assignment {
    int worker = 0;
    Vec x;
    std::uint64_t tag = 0;
  };
  using AssignSink = std::function<void(const Assignment&)>;

  virtual ~ServerLogic() = default;
  virtual std::string name() const = 0;
  // Called once; hand out the initial work.
  virtual void start(int n_workers, AssignSink assign) = 0;
  // Worker `worker` finished a draw tagged `tag`.
  virtual void on_report(int worker, const Vec& g, std::uint64_t tag,
                         AssignSink assign) = 0;
  virtual const Vec& iterate() const = 0;
  virtual std::uint64_t iteration() const = 0;
  // Iteration delay of the most recently applied gradient, -1 if the method
  // has no such notion.
  virtual int last_delay() const { return -1; }
};

// Collects a batch of S draws tagged with the current iteration, ignoring
// everything tagged with an older one, then takes one gradient step. Every
// reporting worker is handed the current point before the step fires.
struct RennalaLogic : ServerLogic {
  Vec x;
  double gamma;
  std::uint64_t batch;
  std::uint64_t k = 0;
  Vec g_acc;
  std::uint64_t fresh = 0;

  RennalaLogic(Vec x0, double step, std::uint64_t S)
      : x(std::move(x0)), gamma(step), batch(S), g_acc(x.size(), 0.0) {
    if (S < 1) throw ConfigError("rennala: batch size must be >= 1");
  }

  std::string name() const override { return "rennala"; }

  void start(int n, AssignSink assign) override {
    for (int w = 0; w < n; ++w) assign({w, x, k});
  }

  void on_report(int worker, const Vec& g, std::uint64_t tag,
                 AssignSink assign) override {
    if (tag == k) {
      axpy(1.0 / static_cast<double>(batch), g, g_acc);
      ++fresh;
    }
    if (fresh == batch) {
      axpy(-gamma, g_acc, x);
      std::fill(g_acc.begin(), g_acc.end(), 0.0);
      fresh = 0;
      ++k;
    }
    // reporting workers always receive the current point and index
    assign({worker, x, k});
  }

  const Vec& iterate() const override { return x; }
  std::uint64_t iteration() const override { return k; }
};

// Rennala collection with the averaged iterate reported as the output, the
// form the convex guarantee speaks about. Workers still receive the last
// iterate; only the reported point (and therefore recorded metrics) change.
struct ConvexRennalaLogic : RennalaLogic {
  Vec iterate_sum;
  std::uint64_t averaged_count = 0;
  Vec average;

  ConvexRennalaLogic(Vec x0, double step, std::uint64_t S)
      : RennalaLogic(std::move(x0), step, S),
        iterate_sum(x.size(), 0.0),
        average(x) {}

  std::string name() const override { return "convex_rennala"; }

  void on_report(int worker, const Vec& g, std::uint64_t tag,
                 AssignSink assign) override {
    const Vec pre = x;
    const std::uint64_t k_before = k;
    RennalaLogic::on_report(worker, g, tag, assign);
    if (k != k_before) {
      axpy(1.0, pre, iterate_sum);
      ++averaged_count;
      average = iterate_sum;
      scale(average, 1.0 / static_cast<double>(averaged_count));
    }
  }

  // x_hat^K = (1/K) sum of the first K iterates
  const Vec& iterate() const override {
    return averaged_count == 0 ? x : average;
  }
};

// Per-worker accumulators with the harmonic-mean guard: the step fires once
// (1/n sum 1/B_i)^{-1} >= S/n, which needs every worker to contribute.
struct MaleniaLogic : ServerLogic {
  Vec x;
  double gamma;
  std::uint64_t S;
  int n = 0;
  std::uint64_t k = 0;
  std::vector<Vec> g_acc;
  std::vector<std::uint64_t> counts;

  MaleniaLogic(Vec x0, double step, std::uint64_t S_)
      : x(std::move(x0)), gamma(step), S(S_) {
    if (S < 1) throw ConfigError("malenia: S must be >= 1");
  }

  std::string name() const override { return "malenia"; }

  void start(int n_workers, AssignSink assign) override {
    n = n_workers;
    g_acc.assign(static_cast<std::size_t>(n), Vec(x.size(), 0.0));
    counts.assign(static_cast<std::size_t>(n), 0);
    for (int w = 0; w < n; ++w) assign({w, x, k});
  }

  // Harmonic mean of the batch counts, 0 while any worker has none.
  double harmonic_mean() const {
    double inv = 0.0;
    for (auto b : counts) {
      if (b == 0) return 0.0;
      inv += 1.0 / static_cast<double>(b);
    }
    return static_cast<double>(n) / inv;
  }

  void on_report(int worker, const Vec& g, std::uint64_t tag,
                 AssignSink assign) override {
    if (tag == k) {
      axpy(1.0, g, g_acc[static_cast<std::size_t>(worker)]);
      ++counts[static_cast<std::size_t>(worker)];
    }
    if (harmonic_mean() >= static_cast<double>(S) / static_cast<double>(n)) {
      for (int w = 0; w < n; ++w) {
        const auto wi = static_cast<std::size_t>(w);
        axpy(-gamma / (static_cast<double>(n) *
                       static_cast<double>(counts[wi])),
             g_acc[wi], x);
        std::fill(g_acc[wi].begin(), g_acc[wi].end(), 0.0);
        counts[wi] = 0;
      }
      ++k;
    }
    assign({worker, x, k});
  }

  const Vec& iterate() const override { return x; }
  std::uint64_t iteration() const override { return k; }
};

// Synchronous rounds over the m fastest workers.
struct MinibatchLogic : ServerLogic {
  Vec x;
  double gamma;
  int m;
  std::uint64_t k = 0;
  Vec g_acc;
  int received = 0;

  MinibatchLogic(Vec x0, double step, int m_workers)
      : x(std::move(x0)), gamma(step), m(m_workers), g_acc(x.size(), 0.0) {
    if (m < 1) throw ConfigError("minibatch: m must be >= 1");
  }

  std::string name() const override {
    return "minibatch_m" + std::to_string(m);
  }

  void start(int n, AssignSink assign) override {
    if (m > n) throw ConfigError("minibatch: m exceeds pool size");
    for (int w = 0; w < m; ++w) assign({w, x, k});
  }

  void on_report(int worker, const Vec& g, std::uint64_t tag,
                 AssignSink assign) override {
    (void)worker;
    (void)tag;
    axpy(1.0 / static_cast<double>(m), g, g_acc);
    ++received;
    if (received == m) {
      axpy(-gamma, g_acc, x);
      std::fill(g_acc.begin(), g_acc.end(), 0.0);
      received = 0;
      ++k;
      for (int w = 0; w < m; ++w) assign({w, x, k});
    }
  }

  const Vec& iterate() const override { return x; }
  std::uint64_t iteration() const override { return k; }
};

// Applies every arriving gradient immediately. The step size is either a
// constant or capped by the iteration delay of the report being applied.
struct AsyncSgdLogic : ServerLogic {
  Vec x;
  double gamma_base;
  bool delay_adaptive;
  double adaptive_c;
  double smoothness;
  std::uint64_t k = 0;
  int delay_last = -1;

  AsyncSgdLogic(Vec x0, double gamma, bool adaptive = false, double c = 0.25,
                double L = 1.0)
      : x(std::move(x0)),
        gamma_base(gamma),
        delay_adaptive(adaptive),
        adaptive_c(c),
        smoothness(L) {}

  std::string name() const override {
    return delay_adaptive ? "async_adaptive" : "async";
  }

  void start(int n, AssignSink assign) override {
    for (int w = 0; w < n; ++w) assign({w, x, k});
  }

  double stepsize(int delay) const {
    if (!delay_adaptive) return gamma_base;
    return std::min(gamma_base,
                    adaptive_c / (smoothness * (static_cast<double>(delay) + 1.0)));
  }

  void on_report(int worker, const Vec& g, std::uint64_t tag,
                 AssignSink assign) override {
    delay_last = static_cast<int>(k - tag);
    axpy(-stepsize(delay_last), g, x);
    ++k;
    assign({worker, x, k});
  }

  const Vec& iterate() const override { return x; }
  std::uint64_t iteration() const override { return k; }
  int last_delay() const override { return delay_last; }
};

// Rennala batch collection with the three-sequence accelerated step. The
// batch for iteration k is gathered at the extrapolated point, which is also
// what workers receive.
struct AcceleratedRennalaLogic : ServerLogic {
  Vec x;       // x^k
  Vec u;       // u^k
  Vec query;   // y^{k+1}, the point the current batch is collected at
  double gamma;
  std::uint64_t batch;
  std::uint64_t k = 0;
  Vec g_acc;
  std::uint64_t fresh = 0;

  AcceleratedRennalaLogic(Vec x0, double step, std::uint64_t S)
      : x(x0), u(x0), gamma(step), batch(S), g_acc(x0.size(), 0.0) {
    if (S < 1) throw ConfigError("accelerated rennala: batch size must be >= 1");
    refresh_query();
  }

  std::string name() const override { return "accel_rennala"; }

  double alpha_next() const { return 2.0 / (static_cast<double>(k) + 2.0); }

  void refresh_query() {
    const double a = alpha_next();
    query.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      query[i] = (1.0 - a) * x[i] + a * u[i];
  }

  void start(int n, AssignSink assign) override {
    for (int w = 0; w < n; ++w) assign({w, query, k});
  }

  void on_report(int worker, const Vec& g, std::uint64_t tag,
                 AssignSink assign) override {
    if (tag == k) {
      axpy(1.0 / static_cast<double>(batch), g, g_acc);
      ++fresh;
    }
    if (fresh == batch) {
      const double a = alpha_next();
      const double gamma_k = gamma * (static_cast<double>(k) + 1.0);
      axpy(-gamma_k, g_acc, u);
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = (1.0 - a) * x[i] + a * u[i];
      std::fill(g_acc.begin(), g_acc.end(), 0.0);
      fresh = 0;
      ++k;
      refresh_query();
    }
    assign({worker, query, k});
  }

  const Vec& iterate() const override { return x; }
  std::uint64_t iteration() const override { return k; }
};

// --- theorem-prescribed hyperparameters ---------------------------------------

struct Hyperparams {
  double gamma = 0.0;
  std::uint64_t S = 1;
  std::uint64_t K = 1;
  int m = 1;
};

namespace detail {

inline std::uint64_t ceil_div_pos(double v) {
  if (v <= 1.0) return 1;
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace detail

// Nonconvex homogeneous prescription.
inline Hyperparams rennala_hyperparams(double eps, double sigma2, double L,
                                       double delta) {
  if (!(eps > 0.0) || !(L > 0.0) || !(delta > 0.0) || sigma2 < 0.0)
    throw ConfigError("rennala hyperparams: need eps, L, delta > 0");
  Hyperparams h;
  h.S = std::max<std::uint64_t>(detail::ceil_div_pos(sigma2 / eps), 1);
  h.gamma = sigma2 == 0.0
                ? 1.0 / L
                : std::min(1.0 / L, eps * static_cast<double>(h.S) /
                                        (2.0 * L * sigma2));
  h.K = detail::ceil_div_pos(24.0 * delta * L / eps);
  return h;
}

// Nonconvex heterogeneous prescription; S is floored at the pool size.
inline Hyperparams malenia_hyperparams(double eps, double sigma2, double L,
                                       double delta, int n) {
  Hyperparams h = rennala_hyperparams(eps, sigma2, L, delta);
  h.S = std::max<std::uint64_t>(h.S, static_cast<std::uint64_t>(n));
  h.gamma = sigma2 == 0.0
                ? 1.0 / L
                : std::min(1.0 / L, eps * static_cast<double>(h.S) /
                                        (2.0 * L * sigma2));
  return h;
}

// Convex nonsmooth prescription (averaged iterate).
inline Hyperparams convex_rennala_hyperparams(double eps, double sigma2,
                                              double M, double R) {
  if (!(eps > 0.0) || !(M > 0.0) || !(R > 0.0) || sigma2 < 0.0)
    throw ConfigError("convex rennala hyperparams: need eps, M, R > 0");
  Hyperparams h;
  h.S = std::max<std::uint64_t>(detail::ceil_div_pos(sigma2 / (M * M)), 1);
  h.gamma = eps / (M * M + sigma2 / static_cast<double>(h.S));
  h.K = detail::ceil_div_pos(2.0 * M * M * R * R / (eps * eps));
  return h;
}

// Convex smooth prescription for the accelerated variant. The step size
// depends on the horizon K, so it is fixed here as well.
inline Hyperparams accel_rennala_hyperparams(double eps, double sigma2,
                                             double L, double R) {
  if (!(eps > 0.0) || !(L > 0.0) || !(R > 0.0) || sigma2 < 0.0)
    throw ConfigError("accelerated rennala hyperparams: need eps, L, R > 0");
  Hyperparams h;
  h.S = std::max<std::uint64_t>(
      detail::ceil_div_pos(sigma2 * R / (std::pow(eps, 1.5) * std::sqrt(L))),
      1);
  h.K = detail::ceil_div_pos(8.0 * std::sqrt(L) * R / std::sqrt(eps));
  if (sigma2 == 0.0) {
    h.gamma = 1.0 / (4.0 * L);
  } else {
    const double kd = static_cast<double>(h.K);
    h.gamma = std::min(
        1.0 / (4.0 * L),
        std::sqrt(3.0 * R * R * static_cast<double>(h.S) /
                  (4.0 * sigma2 * (kd + 1.0) * (kd + 2.0) * (kd + 2.0))));
  }
  return h;
}

// Synchronized-start prescription for a fixed worker count m.
inline Hyperparams m_minibatch_hyperparams(double eps, double sigma2, double L,
                                           double delta, int m) {
  if (!(eps > 0.0) || !(L > 0.0) || !(delta > 0.0) || sigma2 < 0.0 || m < 1)
    throw ConfigError("m-minibatch hyperparams: need eps, L, delta > 0, m >= 1");
  Hyperparams h;
  h.m = m;
  h.S = static_cast<std::uint64_t>(m);
  h.gamma = sigma2 == 0.0
                ? 1.0 / L
                : std::min(1.0 / L, eps * static_cast<double>(m) /
                                        (2.0 * L * sigma2));
  h.K = detail::ceil_div_pos(12.0 * delta * L / eps +
                             12.0 * delta * L * sigma2 /
                                 (eps * eps * static_cast<double>(m)));
  return h;
}

// Smallest-index minimizer of tau_m (1 + sigma^2 / (m eps)).
inline int optimal_m(const WorkerPool& pool, double sigma2, double eps) {
  if (pool.size() < 1) throw ConfigError("optimal_m: empty pool");
  if (!(eps > 0.0)) throw ConfigError("optimal_m: eps must be positive");
  int best = 1;
  double best_val = pool.delay(0) * (1.0 + sigma2 / eps);
  for (int m = 2; m <= pool.size(); ++m) {
    const double v =
        pool.delay(m - 1) * (1.0 + sigma2 / (static_cast<double>(m) * eps));
    if (v < best_val) {
      best_val = v;
      best = m;
    }
  }
  return best;
}

}  // namespace vtlab
