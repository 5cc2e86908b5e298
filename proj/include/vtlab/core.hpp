#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "vtlab/rng.hpp"
#include "vtlab/vec.hpp"

namespace vtlab {

// Simulated clock value in seconds. Always finite and non-negative; the
// engines enforce monotonicity, tie order is handled by the event queues.
using VirtualTime = double;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolViolation : std::runtime_error {
  std::size_t step;
  ProtocolViolation(std::size_t k, const std::string& what)
      : std::runtime_error(what), step(k) {}
};

// A differentiable objective with exact gradient and the metadata the
// step-size formulas need. `grad_into` avoids per-call allocation on hot
// paths; `grad` is the convenience form.
struct ProblemSpec {
  int dim = 0;
  std::function<double(const Vec&)> value;
  std::function<void(const Vec&, Vec&)> grad_into;
  double smoothness = 0.0;                // L
  std::optional<double> f_star;           // exact minimum when known
  std::optional<double> lipschitz;        // M, convex problems only
  std::optional<double> radius;           // R, convex problems only

  Vec grad(const Vec& x) const {
    Vec g(x.size());
    grad_into(x, g);
    return g;
  }

  double grad_norm_sq(const Vec& x) const {
    Vec g(x.size());
    grad_into(x, g);
    return norm_sq(g);
  }

  // f(x0) - f*, defined only when the minimum is known.
  double gap(const Vec& x0) const {
    if (!f_star) throw ConfigError("problem has no known minimum value");
    return value(x0) - *f_star;
  }
};

enum class EstimatorKind { Exact, Gaussian, BernoulliSparsified, Minibatch };

// Unbiased stochastic-gradient source with a variance bound. `true_grad_into`
// is the exact gradient of the objective this estimator samples (a worker's
// local objective in the heterogeneous setting), used when measuring moments.
struct Estimator {
  EstimatorKind kind = EstimatorKind::Exact;
  double sigma2 = 0.0;
  // Set for coin-based estimators; the draw consumes the coin first, so a
  // copy of the stream reproduces the outcome for trace bookkeeping.
  std::optional<double> coin_prob;
  std::function<void(const Vec&, RngStream&, Vec&)> draw_into;
  std::function<void(const Vec&, Vec&)> true_grad_into;

  Vec draw(const Vec& x, RngStream& rng) const {
    Vec g(x.size());
    draw_into(x, rng, g);
    return g;
  }

  Vec true_grad(const Vec& x) const {
    Vec g(x.size());
    true_grad_into(x, g);
    return g;
  }
};

// Fixed per-worker computation times. Delays are kept sorted ascending, so
// worker 0 is the fastest; every closed-form expression assumes this order.
struct WorkerPool {
  std::vector<double> delays;

  WorkerPool() = default;
  explicit WorkerPool(std::vector<double> taus) : delays(std::move(taus)) {
    if (delays.empty()) throw ConfigError("worker pool must not be empty");
    for (double t : delays) {
      if (!(t > 0.0) || !std::isfinite(t))
        throw ConfigError("worker delays must be positive and finite");
    }
    std::sort(delays.begin(), delays.end());
  }

  int size() const { return static_cast<int>(delays.size()); }
  double delay(int worker) const {
    return delays[static_cast<std::size_t>(worker)];
  }
  double slowest() const { return delays.back(); }
};

inline WorkerPool sqrt_index_pool(int n) {
  std::vector<double> taus(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) taus[static_cast<std::size_t>(i)] = std::sqrt(i + 1.0);
  return WorkerPool(std::move(taus));
}

inline WorkerPool constant_pool(int n, double tau) {
  return WorkerPool(std::vector<double>(static_cast<std::size_t>(n), tau));
}

// Which scalar a stop rule or time-to-threshold query looks at.
enum class Metric { GradNormSq, Suboptimality };

// Stop as soon as any bound is hit. Unbounded runs are refused.
struct StopRule {
  std::optional<std::uint64_t> max_steps;
  std::optional<VirtualTime> max_time;
  std::optional<Metric> target_metric;
  double target_eps = 0.0;

  void validate() const {
    if (!max_steps && !max_time)
      throw ConfigError("stop rule needs max_steps or max_time");
  }

  bool metric_hit(double f_minus_fstar, double gns) const {
    if (!target_metric) return false;
    const double v = (*target_metric == Metric::GradNormSq) ? gns : f_minus_fstar;
    return v <= target_eps;
  }
};

}  // namespace vtlab
