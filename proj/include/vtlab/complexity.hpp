#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "vtlab/core.hpp"

namespace vtlab {

namespace detail {

inline void require_sorted(const std::vector<double>& taus) {
  if (taus.empty()) throw ConfigError("delay list must not be empty");
  for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
    if (taus[i] > taus[i + 1])
      throw ConfigError("delay list must be sorted ascending");
  }
  for (double t : taus) {
    if (!(t > 0.0)) throw ConfigError("delays must be positive");
  }
}

}  // namespace detail

// Equilibrium batch-collection time using the j fastest workers:
// (sum_{i<=j} 1/tau_i)^{-1} (S + j).
inline double t_prime(const std::vector<double>& taus, double S, int j) {
  detail::require_sorted(taus);
  if (j < 1 || static_cast<std::size_t>(j) > taus.size())
    throw ConfigError("t_prime: j out of range");
  if (!(S >= 1.0)) throw ConfigError("t_prime: S must be >= 1");
  double inv = 0.0;
  for (int i = 0; i < j; ++i) inv += 1.0 / taus[static_cast<std::size_t>(i)];
  return (S + static_cast<double>(j)) / inv;
}

// Minimum over j with the smallest-index tie rule.
inline std::pair<double, int> t_prime_min(const std::vector<double>& taus,
                                          double S) {
  detail::require_sorted(taus);
  if (!(S >= 1.0)) throw ConfigError("t_prime_min: S must be >= 1");
  double inv = 0.0;
  double best = std::numeric_limits<double>::infinity();
  int best_j = 1;
  for (std::size_t j = 1; j <= taus.size(); ++j) {
    inv += 1.0 / taus[j - 1];
    const double v = (S + static_cast<double>(j)) / inv;
    if (v < best) {
      best = v;
      best_j = static_cast<int>(j);
    }
  }
  return {best, best_j};
}

// Closed-form time expressions for the nonconvex setting, universal constants
// dropped. All five are evaluated on the same inputs so they can be compared
// ratio-style.
struct TimeBounds {
  double minibatch = 0.0;    // tau_n (LD/e + s2 LD / (n e^2))
  double async_sgd = 0.0;    // harmonic-mean version of the same
  double rennala = 0.0;      // min over m of the partial harmonic mean form
  int rennala_m = 1;
  double heterog = 0.0;      // tau_n LD/e + mean(tau) s2 LD / (n e^2)
  double sync = 0.0;         // min over m of tau_m (LD/e + s2 LD / (m e^2))
  int sync_m = 1;
};

inline TimeBounds time_bounds(const std::vector<double>& taus, double L,
                              double delta, double sigma2, double eps) {
  detail::require_sorted(taus);
  if (!(L > 0.0) || !(delta > 0.0) || !(eps > 0.0) || sigma2 < 0.0)
    throw ConfigError("time_bounds: need L, delta, eps > 0 and sigma2 >= 0");
  const auto n = static_cast<double>(taus.size());
  const double opt_term = L * delta / eps;
  const double stat_num = sigma2 * L * delta / (eps * eps);

  TimeBounds b;
  b.minibatch = taus.back() * (opt_term + stat_num / n);

  double inv_all = 0.0;
  double sum_all = 0.0;
  for (double t : taus) {
    inv_all += 1.0 / t;
    sum_all += t;
  }
  b.async_sgd = (n / inv_all) * (opt_term + stat_num / n);
  b.heterog = taus.back() * opt_term + (sum_all / n) * stat_num / n;

  double inv = 0.0;
  b.rennala = std::numeric_limits<double>::infinity();
  b.sync = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= taus.size(); ++m) {
    inv += 1.0 / taus[m - 1];
    const double md = static_cast<double>(m);
    const double r = (md / inv) * (opt_term + stat_num / md);
    if (r < b.rennala) {
      b.rennala = r;
      b.rennala_m = static_cast<int>(m);
    }
    const double s = taus[m - 1] * (opt_term + stat_num / md);
    if (s < b.sync) {
      b.sync = s;
      b.sync_m = static_cast<int>(m);
    }
  }
  return b;
}

// Convex-setting expressions. `lower` is the partial-harmonic-mean bound,
// `graph_oracle` the depth-plus-size bound it improves on.
struct ConvexBounds {
  double lower = 0.0;
  int lower_m = 1;
  double graph_oracle = 0.0;
  double minibatch = 0.0;
  double async_sgd = 0.0;
};

inline ConvexBounds convex_bounds(const std::vector<double>& taus, double L,
                                  double M, double R, double sigma2,
                                  double eps) {
  detail::require_sorted(taus);
  if (!(L > 0.0) || !(M > 0.0) || !(R > 0.0) || !(eps > 0.0) || sigma2 < 0.0)
    throw ConfigError("convex_bounds: need L, M, R, eps > 0 and sigma2 >= 0");
  const auto n = static_cast<double>(taus.size());
  const double opt_term =
      std::min(std::sqrt(L) * R / std::sqrt(eps), M * M * R * R / (eps * eps));
  const double stat_num = sigma2 * R * R / (eps * eps);

  ConvexBounds b;
  double inv_all = 0.0;
  for (double t : taus) inv_all += 1.0 / t;

  b.graph_oracle = taus.front() * opt_term + (n / inv_all) * stat_num / n;
  b.minibatch = taus.back() * (opt_term + stat_num / n);
  b.async_sgd = (n / inv_all) * (L * R * R / eps + stat_num / n);

  double inv = 0.0;
  b.lower = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= taus.size(); ++m) {
    inv += 1.0 / taus[m - 1];
    const double md = static_cast<double>(m);
    const double v = (md / inv) * (opt_term + stat_num / md);
    if (v < b.lower) {
      b.lower = v;
      b.lower_m = static_cast<int>(m);
    }
  }
  return b;
}

// Two-sided comparison of the threshold form t1 against the additive form
// t2 = min_j (sum_{i<=j} 1/tau_i)^{-1} (S + j); t1 <= t2 <= 6 t1 for S >= 1/4.
struct LemmaTauResult {
  double t1 = 0.0;
  double t2 = 0.0;
  int j1 = 1;
  bool holds = false;
};

inline LemmaTauResult lemma_tau_check(const std::vector<double>& taus,
                                      double S) {
  detail::require_sorted(taus);
  if (!(S >= 0.25)) throw ConfigError("lemma_tau_check: S must be >= 1/4");

  LemmaTauResult r;
  double inv = 0.0;
  for (std::size_t m = 1; m <= taus.size(); ++m) {
    inv += 1.0 / taus[m - 1];
    const double cand = S / inv;
    const double tau_next = m < taus.size()
                                ? taus[m]
                                : std::numeric_limits<double>::infinity();
    if (cand < tau_next) {
      r.j1 = static_cast<int>(m);
      r.t1 = cand;
      break;
    }
  }

  inv = 0.0;
  r.t2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= taus.size(); ++j) {
    inv += 1.0 / taus[j - 1];
    r.t2 = std::min(r.t2, (S + static_cast<double>(j)) / inv);
  }

  const double slack = 1e-12 * std::max(1.0, r.t2);
  r.holds = r.t1 <= r.t2 + slack && r.t2 <= 6.0 * r.t1 + slack;
  return r;
}

// Synchronized-start counterpart: t1 = eta min_{m<=eta} tau_m / m versus
// t2 = min_{m<=n} tau_m (1 + eta/m); t1 <= t2 <= 2 t1 for integer eta <= n.
struct LemmaTauSyncResult {
  double t1 = 0.0;
  double t2 = 0.0;
  bool holds = false;
};

inline LemmaTauSyncResult lemma_tau_sync_check(const std::vector<double>& taus,
                                               int eta) {
  detail::require_sorted(taus);
  if (eta < 1 || static_cast<std::size_t>(eta) > taus.size())
    throw ConfigError("lemma_tau_sync_check: eta must be in [1, n]");

  LemmaTauSyncResult r;
  r.t1 = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= eta; ++m)
    r.t1 = std::min(r.t1, taus[static_cast<std::size_t>(m - 1)] /
                              static_cast<double>(m));
  r.t1 *= static_cast<double>(eta);

  r.t2 = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= taus.size(); ++m)
    r.t2 = std::min(r.t2, taus[m - 1] * (1.0 + static_cast<double>(eta) /
                                                   static_cast<double>(m)));

  const double slack = 1e-12 * std::max(1.0, r.t2);
  r.holds = r.t1 <= r.t2 + slack && r.t2 <= 2.0 * r.t1 + slack;
  return r;
}

}  // namespace vtlab
