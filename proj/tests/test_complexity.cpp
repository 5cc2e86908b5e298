#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "vtlab/complexity.hpp"
#include "vtlab/rng.hpp"

using namespace vtlab;

namespace {

std::vector<double> random_sorted_taus(RngStream& rng, int max_n = 16) {
  const int n = 1 + static_cast<int>(rng.next_index(max_n));
  std::vector<double> taus;
  for (int i = 0; i < n; ++i)
    taus.push_back(0.05 + 8.0 * rng.next_unit() * rng.next_unit());
  std::sort(taus.begin(), taus.end());
  return taus;
}

}  // namespace

TEST_CASE("equilibrium collection time evaluates exactly", "[complexity]") {
  REQUIRE(t_prime({1.0, 4.0}, 2.0, 1) == Catch::Approx(3.0));
  REQUIRE(t_prime({1.0, 4.0}, 2.0, 2) == Catch::Approx(3.2));
  const auto [v, j] = t_prime_min({1.0, 4.0}, 2.0);
  REQUIRE(v == Catch::Approx(3.0));
  REQUIRE(j == 1);

  const auto [v2, j2] = t_prime_min({2.0, 2.0, 2.0, 2.0}, 4.0);
  REQUIRE(v2 == Catch::Approx(4.0));
  REQUIRE(j2 == 4);

  REQUIRE(t_prime({3.0}, 5.0, 1) == Catch::Approx(3.0 * 6.0));
  REQUIRE_THROWS_AS(t_prime({4.0, 1.0}, 2.0, 1), ConfigError);
  REQUIRE_THROWS_AS(t_prime({1.0, 4.0}, 2.0, 3), ConfigError);
}

TEST_CASE("nonconvex time expressions match hand evaluations", "[complexity]") {
  const TimeBounds b = time_bounds({1.0, 1.0}, 1.0, 1.0, 1.0, 1.0);
  REQUIRE(b.async_sgd == Catch::Approx(1.5));
  REQUIRE(b.rennala == Catch::Approx(1.5));
  REQUIRE(b.rennala_m == 2);
  REQUIRE(b.minibatch == Catch::Approx(1.5));
  REQUIRE(b.heterog == Catch::Approx(1.0 + 0.5));
  REQUIRE(b.sync == Catch::Approx(1.5));

  // no noise: the fastest worker alone is optimal
  const TimeBounds q = time_bounds({0.5, 2.0, 3.0}, 2.0, 1.0, 0.0, 0.1);
  REQUIRE(q.rennala == Catch::Approx(0.5 * 2.0 * 1.0 / 0.1));
  REQUIRE(q.rennala_m == 1);
  REQUIRE(q.sync_m == 1);

  // equal delays collapse the heterogeneous means
  const TimeBounds h = time_bounds({2.0, 2.0}, 1.0, 3.0, 4.0, 0.5);
  REQUIRE(h.heterog ==
          Catch::Approx(2.0 * (3.0 / 0.5 + 4.0 * 3.0 / (2.0 * 0.25))));
  REQUIRE(h.heterog == Catch::Approx(h.minibatch));
}

TEST_CASE("convex expressions pick the binding optimization term",
          "[complexity]") {
  // huge M: the smooth term wins the min
  const ConvexBounds a = convex_bounds({1.0, 2.0}, 4.0, 1e9, 1.0, 1.0, 1.0);
  REQUIRE(a.lower ==
          Catch::Approx(std::min({(1.0 / 1.0) * (2.0 + 1.0),
                                  (2.0 / 1.5) * (2.0 + 0.5)})));
  // n = 1: both bounds use the single delay
  const ConvexBounds c = convex_bounds({2.0}, 1.0, 1.0, 1.0, 0.0, 0.25);
  REQUIRE(c.lower == Catch::Approx(2.0 * std::min(2.0, 16.0)));
  REQUIRE(c.graph_oracle == Catch::Approx(2.0 * std::min(2.0, 16.0)));
}

TEST_CASE("ratio to the graph-oracle bound grows on square-root delays",
          "[complexity]") {
  auto ratio = [](int n) {
    std::vector<double> taus;
    for (int i = 1; i <= n; ++i) taus.push_back(std::sqrt(i));
    // R = L = 1, eps = 1 makes the optimization term exactly 1;
    // sigma2 = sqrt(n) puts the statistical weight at a = sqrt(n)
    const ConvexBounds b =
        convex_bounds(taus, 1.0, 1e9, 1.0, std::sqrt(n), 1.0);
    return b.lower / b.graph_oracle;
  };
  REQUIRE(ratio(256) / ratio(16) >= 1.7);
  REQUIRE(ratio(4096) / ratio(256) >= 1.7);
}

TEST_CASE("two-sided threshold comparison follows the stated bounds",
          "[complexity]") {
  const LemmaTauResult r = lemma_tau_check({1.0, 1.0}, 1.0);
  REQUIRE(r.j1 == 2);
  REQUIRE(r.t1 == Catch::Approx(0.5));
  REQUIRE(r.t2 == Catch::Approx(1.5));
  REQUIRE(r.holds);

  // single worker: t1 = S tau, t2 = tau (S + 1)
  const LemmaTauResult s = lemma_tau_check({2.0}, 3.0);
  REQUIRE(s.t1 == Catch::Approx(6.0));
  REQUIRE(s.t2 == Catch::Approx(8.0));
  REQUIRE(s.holds);

  const LemmaTauSyncResult y = lemma_tau_sync_check({1.0, 3.0, 3.5}, 1);
  REQUIRE(y.t1 == Catch::Approx(1.0));
  REQUIRE(y.t2 <= 2.0 * y.t1);
  REQUIRE(y.holds);

  REQUIRE_THROWS_AS(lemma_tau_check({1.0}, 0.1), ConfigError);
  REQUIRE_THROWS_AS(lemma_tau_sync_check({1.0}, 2), ConfigError);
}

TEST_CASE("threshold comparisons hold on random inputs", "[complexity]") {
  RngStream rng{314};
  for (int trial = 0; trial < 2000; ++trial) {
    const auto taus = random_sorted_taus(rng);
    const double S = 0.25 + 500.0 * rng.next_unit() * rng.next_unit();
    REQUIRE(lemma_tau_check(taus, S).holds);
    const int eta =
        1 + static_cast<int>(rng.next_index(static_cast<int>(taus.size())));
    REQUIRE(lemma_tau_sync_check(taus, eta).holds);
  }
}

TEST_CASE("expressions never increase when a worker speeds up",
          "[complexity]") {
  RngStream rng{2718};
  for (int trial = 0; trial < 500; ++trial) {
    auto taus = random_sorted_taus(rng);
    const double L = 0.5 + rng.next_unit();
    const double delta = 0.5 + 3.0 * rng.next_unit();
    const double sigma2 = 2.0 * rng.next_unit();
    const double eps = 0.05 + rng.next_unit();
    const TimeBounds before = time_bounds(taus, L, delta, sigma2, eps);

    auto faster = taus;
    const std::size_t idx = rng.next_index(taus.size());
    faster[idx] *= 0.3 + 0.6 * rng.next_unit();
    std::sort(faster.begin(), faster.end());
    const TimeBounds after = time_bounds(faster, L, delta, sigma2, eps);

    const double slack = 1e-9;
    REQUIRE(after.minibatch <= before.minibatch + slack);
    REQUIRE(after.async_sgd <= before.async_sgd + slack);
    REQUIRE(after.rennala <= before.rennala + slack);
    REQUIRE(after.heterog <= before.heterog + slack);
    REQUIRE(after.sync <= before.sync + slack);
  }
}

TEST_CASE("bound orderings hold for all inputs", "[complexity]") {
  RngStream rng{1618};
  for (int trial = 0; trial < 2000; ++trial) {
    const auto taus = random_sorted_taus(rng);
    const double L = 0.2 + rng.next_unit();
    const double delta = 0.2 + 4.0 * rng.next_unit();
    const double sigma2 = 3.0 * rng.next_unit();
    const double eps = 0.02 + rng.next_unit();
    const TimeBounds b = time_bounds(taus, L, delta, sigma2, eps);
    const double slack = 1e-9 * (1.0 + b.minibatch);
    // the asynchronous-capable bound can only improve on synchronized ones
    REQUIRE(b.rennala <= b.minibatch + slack);
    REQUIRE(b.rennala <= b.async_sgd + slack);
    REQUIRE(b.rennala <= b.sync + slack);
    REQUIRE(b.sync <= b.minibatch + slack);
  }
}

TEST_CASE("equilibrium time tracks the simulated collection time",
          "[complexity]") {
  // the sandwich lives in the event_sim suite; here only the formula side:
  // t'(j*) is within [S (sum 1/tau)^-1, tau_1 (S + 1)]
  RngStream rng{55};
  for (int trial = 0; trial < 500; ++trial) {
    const auto taus = random_sorted_taus(rng);
    const double S = 1.0 + std::floor(200.0 * rng.next_unit());
    const auto [v, j] = t_prime_min(taus, S);
    double inv = 0.0;
    for (double t : taus) inv += 1.0 / t;
    REQUIRE(v >= S / inv - 1e-9);
    REQUIRE(v <= taus.front() * (S + 1.0) + 1e-9);
    REQUIRE(j >= 1);
  }
}
