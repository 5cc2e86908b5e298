#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "vtlab/core.hpp"
#include "vtlab/estimators.hpp"

namespace vtlab {

// Constants of the chain construction.
inline constexpr double kChainGapPerLevel = 12.0;   // value gap per coordinate
inline constexpr double kChainSmoothness = 152.0;   // gradient Lipschitz bound
inline constexpr double kChainGradSup = 23.0;       // sup-norm gradient bound

inline int prog(const Vec& x) { return progress_index(x); }

// --- chain building blocks ----------------------------------------------------

// Smooth bump switch: 0 up to 1/2, exp(1 - 1/(2x-1)^2) beyond. The factor
// exp(...) underflows to 0 on the limit side, which also keeps the derivative
// finite there; the explicit early return avoids 0 * inf at x = 1/2.
inline double chain_psi(double x) {
  if (x <= 0.5) return 0.0;
  const double u = 2.0 * x - 1.0;
  return std::exp(1.0 - 1.0 / (u * u));
}

inline double chain_psi_prime(double x) {
  if (x <= 0.5) return 0.0;
  const double u = 2.0 * x - 1.0;
  const double e = std::exp(1.0 - 1.0 / (u * u));
  if (e == 0.0) return 0.0;
  return e * 4.0 / (u * u * u);
}

inline constexpr double kSqrtE = 1.6487212707001281468486507878142;
inline constexpr double kSqrtHalfPi = 1.2533141373155002512078826424055;
inline constexpr double kSqrtHalf = 0.70710678118654752440084436210485;

// Scaled gaussian integral in closed form.
inline double chain_phi(double x) {
  return kSqrtE * kSqrtHalfPi * (1.0 + std::erf(x * kSqrtHalf));
}

inline double chain_phi_prime(double x) {
  return kSqrtE * std::exp(-0.5 * x * x);
}

// Chain function of length T = x.size(); gradients cannot reach more than
// one coordinate past the progress index.
inline double ft_value(const Vec& x) {
  const auto T = x.size();
  double v = -chain_psi(1.0) * chain_phi(x[0]);
  for (std::size_t i = 1; i < T; ++i) {
    v += chain_psi(-x[i - 1]) * chain_phi(-x[i]) -
         chain_psi(x[i - 1]) * chain_phi(x[i]);
  }
  return v;
}

inline void ft_grad_into(const Vec& x, Vec& g) {
  const auto T = x.size();
  g.assign(T, 0.0);
  g[0] = -chain_psi(1.0) * chain_phi_prime(x[0]);
  for (std::size_t i = 1; i < T; ++i) {
    // term i couples x_{i-1} and x_i
    g[i - 1] += -chain_psi_prime(-x[i - 1]) * chain_phi(-x[i]) -
                chain_psi_prime(x[i - 1]) * chain_phi(x[i]);
    g[i] += -chain_psi(-x[i - 1]) * chain_phi_prime(-x[i]) -
            chain_psi(x[i - 1]) * chain_phi_prime(x[i]);
  }
}

inline Vec ft_grad(const Vec& x) {
  Vec g;
  ft_grad_into(x, g);
  return g;
}

// --- scaled nonconvex instance -------------------------------------------------

// Scaled chain paired with the single-coin sparsified oracle. Gradients stay
// larger than sqrt(2 eps) until the progress index reaches T.
struct NonconvexHard {
  int T = 0;
  double lambda = 0.0;
  double p = 1.0;
  double L = 0.0;
  double delta = 0.0;
  double sigma2 = 0.0;
  double eps = 0.0;
  ProblemSpec problem;
  Estimator estimator;
};

inline NonconvexHard make_nonconvex_hard(double L, double delta, double sigma2,
                                         double eps) {
  if (!(L > 0.0) || !(delta > 0.0) || !(eps > 0.0) || sigma2 < 0.0)
    throw ConfigError("nonconvex instance: need L, delta, eps > 0");
  NonconvexHard h;
  h.L = L;
  h.delta = delta;
  h.sigma2 = sigma2;
  h.eps = eps;
  h.lambda = std::sqrt(2.0 * eps) * kChainSmoothness / L;
  const double t_raw =
      delta * L / (2.0 * eps * kChainSmoothness * kChainGapPerLevel);
  if (t_raw < 1.0)
    throw ConfigError("nonconvex instance: parameters give dimension < 1");
  h.T = static_cast<int>(std::floor(t_raw));
  h.p = sigma2 == 0.0
            ? 1.0
            : std::min(2.0 * eps * kChainGradSup * kChainGradSup / sigma2, 1.0);

  const double lam = h.lambda;
  const double scale = L * lam * lam / kChainSmoothness;
  const double gscale = L * lam / kChainSmoothness;
  const int T = h.T;

  h.problem.dim = T;
  h.problem.value = [lam, scale](const Vec& x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / lam;
    return scale * ft_value(y);
  };
  h.problem.grad_into = [lam, gscale](const Vec& x, Vec& g) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / lam;
    ft_grad_into(y, g);
    for (double& v : g) v *= gscale;
  };
  h.problem.smoothness = L;

  h.estimator = bernoulli_estimator(h.problem, h.p);
  // Exact variance bound from the two-outcome enumeration and the sup-norm
  // bound of the chain gradient.
  h.estimator.sigma2 =
      gscale * gscale * kChainGradSup * kChainGradSup * (1.0 - h.p) / h.p;
  return h;
}

// --- convex instance ------------------------------------------------------------

// Max of shifted affine functions smoothed through its proximal envelope.
// The prox solves a simplex-constrained concave quadratic exactly by the
// sort-based water-filling rule, so gradients are exact too.
struct ConvexHard {
  int T = 0;        // progress levels; ambient dimension is T + 1
  double l = 0.0;   // Lipschitz scale
  double eta = 0.0; // smoothing / smoothness
  double eps = 0.0;
  ProblemSpec problem;
};

namespace detail {

// Water level v with sum_r max(a_r - v, 0) = s, active-set by sorting.
inline double water_level(const Vec& a, double s) {
  Vec sorted = a;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double prefix = 0.0;
  for (std::size_t kk = 1; kk <= sorted.size(); ++kk) {
    prefix += sorted[kk - 1];
    const double v = (prefix - s) / static_cast<double>(kk);
    const double next = kk < sorted.size()
                            ? sorted[kk]
                            : -std::numeric_limits<double>::infinity();
    if (v >= next) return v;
  }
  return (prefix - s) / static_cast<double>(sorted.size());
}

}  // namespace detail

// Dual weights of the prox at x: lambda on the simplex with
// y = x - (l/eta) lambda.
inline Vec convex_prox_weights(const Vec& x, double l, double eta) {
  if (!(l > 0.0) || !(eta > 0.0))
    throw ConfigError("convex prox: l and eta must be positive");
  const double s = l * l / eta;
  Vec a(x.size());
  for (std::size_t r = 0; r < x.size(); ++r)
    a[r] = l * x[r] - 5.0 * l * l * static_cast<double>(r) / eta;
  const double v = detail::water_level(a, s);
  Vec lambda(x.size());
  for (std::size_t r = 0; r < x.size(); ++r)
    lambda[r] = std::max(a[r] - v, 0.0) / s;
  return lambda;
}

inline Vec convex_prox(const Vec& x, double l, double eta) {
  const Vec lambda = convex_prox_weights(x, l, eta);
  Vec y = x;
  axpy(-l / eta, lambda, y);
  return y;
}

inline double convex_hard_value(const Vec& x, double l, double eta) {
  const Vec lambda = convex_prox_weights(x, l, eta);
  // max value at the prox point plus the quadratic penalty
  double v = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < x.size(); ++r) {
    const double a = l * x[r] - 5.0 * l * l * static_cast<double>(r) / eta -
                     (l * l / eta) * lambda[r];
    v = std::max(v, a);
  }
  return v + (l * l / (2.0 * eta)) * norm_sq(lambda);
}

inline void convex_hard_grad_into(const Vec& x, double l, double eta, Vec& g) {
  g = convex_prox_weights(x, l, eta);
  scale(g, l);
}

inline ConvexHard make_convex_hard(double M, double L, double eps) {
  if (!(M > 0.0) || !(L > 0.0) || !(eps > 0.0))
    throw ConfigError("convex instance: need M, L, eps > 0");
  const double t_lip = M * M / (64.0 * eps * eps) - 1.0;
  const double t_smooth = std::sqrt(L) / (std::sqrt(80.0) * std::sqrt(eps)) - 1.0;
  const double t_raw = std::min(t_lip, t_smooth);
  if (t_raw < 1.0)
    throw ConfigError("convex instance: parameters give dimension < 1");

  ConvexHard h;
  h.T = static_cast<int>(std::floor(t_raw));
  h.eps = eps;
  const double levels = static_cast<double>(h.T) + 1.0;
  h.l = std::min(M, L / (10.0 * std::pow(levels, 1.5)));
  h.eta = 10.0 * std::pow(levels, 1.5) * h.l;

  const double l = h.l;
  const double eta = h.eta;
  h.problem.dim = h.T + 1;
  h.problem.value = [l, eta](const Vec& x) {
    return convex_hard_value(x, l, eta);
  };
  h.problem.grad_into = [l, eta](const Vec& x, Vec& g) {
    convex_hard_grad_into(x, l, eta, g);
  };
  h.problem.smoothness = eta;
  h.problem.lipschitz = l;
  h.problem.radius = 1.0;
  return h;
}

// --- heterogeneous block instance -----------------------------------------------

// n chain blocks, one per worker, with per-worker scales and coin
// probabilities matched to the delays. Worker i's objective touches only its
// own block; the average is L-smooth.
struct HeterogHard {
  int n = 0;
  int T = 0;  // per-block levels
  std::vector<double> lambdas;
  std::vector<double> probs;
  ProblemSpec problem;                    // the average objective
  std::vector<ProblemSpec> local;         // worker objectives
  std::vector<Estimator> estimators;      // per-worker sparsified oracles
  bool single_block = false;              // variant with only the slowest
                                          // worker holding a nonzero function
};

inline int heterog_block_prog(const Vec& x, int block, int T) {
  Vec blk(static_cast<std::size_t>(T));
  for (int j = 0; j < T; ++j)
    blk[static_cast<std::size_t>(j)] =
        x[static_cast<std::size_t>(block * T + j)];
  return prog(blk);
}

inline HeterogHard make_heterog_hard(int n, double L, double delta,
                                     double sigma2, double eps,
                                     const WorkerPool& pool) {
  if (n < 1 || pool.size() != n)
    throw ConfigError("heterogeneous instance: pool size must equal n");
  if (!(L > 0.0) || !(delta > 0.0) || !(eps > 0.0) || sigma2 < 0.0)
    throw ConfigError("heterogeneous instance: need L, delta, eps > 0");

  const double block_noise = 4.0;  // the eta constant of the construction
  const double t_raw =
      delta * L /
      (block_noise * eps * kChainSmoothness * kChainGapPerLevel);
  if (t_raw < 1.0)
    throw ConfigError("heterogeneous instance: parameters give dimension < 1");

  HeterogHard h;
  h.n = n;
  h.T = static_cast<int>(std::floor(t_raw));
  const int T = h.T;

  double tau_sum = 0.0;
  for (int i = 0; i < n; ++i) tau_sum += pool.delay(i);

  h.lambdas.resize(static_cast<std::size_t>(n));
  h.probs.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    h.lambdas[static_cast<std::size_t>(i)] =
        kChainSmoothness *
        std::sqrt(block_noise * eps * pool.delay(i)) /
        (L * std::sqrt(tau_sum));
    h.probs[static_cast<std::size_t>(i)] =
        sigma2 == 0.0
            ? 1.0
            : std::min(static_cast<double>(n) * static_cast<double>(n) *
                           kChainGradSup * kChainGradSup * block_noise * eps *
                           pool.delay(i) / (sigma2 * tau_sum),
                       1.0);
  }

  const int dim = n * T;
  auto local_value = [n, T, L](double lam, int block, const Vec& x) {
    Vec blk(static_cast<std::size_t>(T));
    for (int j = 0; j < T; ++j)
      blk[static_cast<std::size_t>(j)] =
          x[static_cast<std::size_t>(block * T + j)] / lam;
    return static_cast<double>(n) * L * lam * lam / kChainSmoothness *
           ft_value(blk);
  };
  auto local_grad_into = [n, T, L](double lam, int block, const Vec& x,
                                   Vec& g) {
    Vec blk(static_cast<std::size_t>(T));
    for (int j = 0; j < T; ++j)
      blk[static_cast<std::size_t>(j)] =
          x[static_cast<std::size_t>(block * T + j)] / lam;
    Vec gb;
    ft_grad_into(blk, gb);
    std::fill(g.begin(), g.end(), 0.0);
    const double gs = static_cast<double>(n) * L * lam / kChainSmoothness;
    for (int j = 0; j < T; ++j)
      g[static_cast<std::size_t>(block * T + j)] =
          gs * gb[static_cast<std::size_t>(j)];
  };

  h.local.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lam = h.lambdas[static_cast<std::size_t>(i)];
    ProblemSpec& ps = h.local[static_cast<std::size_t>(i)];
    ps.dim = dim;
    ps.value = [local_value, lam, i](const Vec& x) {
      return local_value(lam, i, x);
    };
    ps.grad_into = [local_grad_into, lam, i](const Vec& x, Vec& g) {
      g.resize(x.size());
      local_grad_into(lam, i, x, g);
    };
    ps.smoothness = static_cast<double>(n) * L;
  }

  h.problem.dim = dim;
  h.problem.value = [locals = h.local, n](const Vec& x) {
    double v = 0.0;
    for (const auto& f : locals) v += f.value(x);
    return v / static_cast<double>(n);
  };
  h.problem.grad_into = [locals = h.local, n](const Vec& x, Vec& g) {
    g.assign(x.size(), 0.0);
    Vec gi(x.size());
    for (const auto& f : locals) {
      f.grad_into(x, gi);
      axpy(1.0 / static_cast<double>(n), gi, g);
    }
  };
  h.problem.smoothness = L;

  h.estimators.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double pi = h.probs[static_cast<std::size_t>(i)];
    Estimator& e = h.estimators[static_cast<std::size_t>(i)];
    e.kind = EstimatorKind::BernoulliSparsified;
    e.coin_prob = pi;
    e.sigma2 = sigma2;
    e.true_grad_into = h.local[static_cast<std::size_t>(i)].grad_into;
    const auto grad_fn = h.local[static_cast<std::size_t>(i)].grad_into;
    e.draw_into = [grad_fn, pi, i, T](const Vec& x, RngStream& rng, Vec& out) {
      const bool xi = rng.next_bernoulli(pi);
      grad_fn(x, out);
      const int block_prog = heterog_block_prog(x, i, T);
      const double factor = xi ? 1.0 / pi : 0.0;
      // indices past (block start + block progress) get the coin factor
      for (std::size_t j = static_cast<std::size_t>(i * T + block_prog);
           j < out.size(); ++j)
        out[j] *= factor;
    };
  }
  return h;
}

// Variant with every worker but the slowest holding the zero function.
inline HeterogHard make_heterog_hard_single_block(int n, double L,
                                                  double delta, double eps) {
  if (n < 1) throw ConfigError("heterogeneous instance: n must be >= 1");
  if (!(L > 0.0) || !(delta > 0.0) || !(eps > 0.0))
    throw ConfigError("heterogeneous instance: need L, delta, eps > 0");
  const double t_raw =
      delta * L / (kChainSmoothness * eps * kChainGapPerLevel);
  if (t_raw < 1.0)
    throw ConfigError("heterogeneous instance: parameters give dimension < 1");

  HeterogHard h;
  h.single_block = true;
  h.n = n;
  h.T = static_cast<int>(std::floor(t_raw));
  const int T = h.T;
  const double lam = kChainSmoothness * std::sqrt(eps) / L;
  h.lambdas.assign(static_cast<std::size_t>(n), 0.0);
  h.lambdas.back() = lam;
  h.probs.assign(static_cast<std::size_t>(n), 1.0);

  h.local.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ProblemSpec& ps = h.local[static_cast<std::size_t>(i)];
    ps.dim = T;
    if (i + 1 < n) {
      ps.value = [](const Vec&) { return 0.0; };
      ps.grad_into = [](const Vec& x, Vec& g) { g.assign(x.size(), 0.0); };
      ps.smoothness = 0.0;
    } else {
      ps.value = [lam, n, T, L](const Vec& x) {
        Vec y(static_cast<std::size_t>(T));
        for (int j = 0; j < T; ++j)
          y[static_cast<std::size_t>(j)] =
              x[static_cast<std::size_t>(j)] / lam;
        return static_cast<double>(n) * L * lam * lam / kChainSmoothness *
               ft_value(y);
      };
      ps.grad_into = [lam, n, T, L](const Vec& x, Vec& g) {
        Vec y(static_cast<std::size_t>(T));
        for (int j = 0; j < T; ++j)
          y[static_cast<std::size_t>(j)] =
              x[static_cast<std::size_t>(j)] / lam;
        ft_grad_into(y, g);
        const double gs = static_cast<double>(n) * L * lam / kChainSmoothness;
        for (double& v : g) v *= gs;
      };
      ps.smoothness = static_cast<double>(n) * L;
    }
  }

  h.problem.dim = T;
  h.problem.value = [locals = h.local, n](const Vec& x) {
    return locals.back().value(x) / static_cast<double>(n);
  };
  h.problem.grad_into = [locals = h.local, n](const Vec& x, Vec& g) {
    locals.back().grad_into(x, g);
    scale(g, 1.0 / static_cast<double>(n));
  };
  h.problem.smoothness = L;

  h.estimators.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Estimator& e = h.estimators[static_cast<std::size_t>(i)];
    e.kind = EstimatorKind::Exact;
    e.sigma2 = 0.0;
    e.true_grad_into = h.local[static_cast<std::size_t>(i)].grad_into;
    const auto grad_fn = h.local[static_cast<std::size_t>(i)].grad_into;
    e.draw_into = [grad_fn](const Vec& x, RngStream&, Vec& out) {
      grad_fn(x, out);
    };
  }
  return h;
}

}  // namespace vtlab
