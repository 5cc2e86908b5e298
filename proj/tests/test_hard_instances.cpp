#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vtlab/hard_instances.hpp"

using namespace vtlab;

namespace {

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                double h = 1e-6) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

// Random point with a prescribed progress index.
Vec point_with_prog(RngStream& rng, int dim, int level, double spread) {
  Vec x(static_cast<std::size_t>(dim), 0.0);
  for (int j = 0; j < level; ++j)
    x[static_cast<std::size_t>(j)] = spread * rng.next_normal();
  if (level > 0 && x[static_cast<std::size_t>(level - 1)] == 0.0)
    x[static_cast<std::size_t>(level - 1)] = spread;
  return x;
}

// Projected gradient ascent on the dual of the prox subproblem, projection
// via bisection on the water level. Entirely independent of the sort-based
// solver it cross-checks.
Vec prox_reference(const Vec& x, double l, double eta) {
  const std::size_t n = x.size();
  const double s = l * l / eta;
  Vec a(n);
  for (std::size_t r = 0; r < n; ++r)
    a[r] = l * x[r] - 5.0 * l * l * static_cast<double>(r) / eta;

  auto project_simplex = [](Vec v) {
    double lo = -1e12, hi = 1e12;
    for (double e : v) hi = std::max(hi, e);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      double sum = 0.0;
      for (double e : v) sum += std::max(e - mid, 0.0);
      if (sum > 1.0)
        lo = mid;
      else
        hi = mid;
    }
    for (double& e : v) e = std::max(e - 0.5 * (lo + hi), 0.0);
    return v;
  };

  Vec lambda(n, 1.0 / static_cast<double>(n));
  const double step = 1.0 / s;
  for (int it = 0; it < 500; ++it) {
    Vec g(n);
    for (std::size_t r = 0; r < n; ++r) g[r] = lambda[r] + step * (a[r] - s * lambda[r]);
    lambda = project_simplex(g);
  }
  Vec y = x;
  axpy(-l / eta, lambda, y);
  return y;
}

}  // namespace

TEST_CASE("progress index definition", "[hard]") {
  REQUIRE(prog({0.0, 0.0, 0.0}) == 0);
  REQUIRE(prog({1.0, 2.0, 0.0}) == 2);
  REQUIRE(prog({0.0, 0.0, 5.0}) == 3);
  REQUIRE(prog({}) == 0);
}

TEST_CASE("chain gradient at the origin", "[hard]") {
  Vec zero(8, 0.0);
  const Vec g = ft_grad(zero);
  REQUIRE(g[0] == Catch::Approx(-kSqrtE).epsilon(1e-12));
  for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g[i] == 0.0);
  REQUIRE(norm(g) > 1.0);
  REQUIRE(norm(g) == Catch::Approx(1.6487212707).epsilon(1e-9));
}

TEST_CASE("chain switch function is safe around its joint", "[hard]") {
  REQUIRE(chain_psi(0.5) == 0.0);
  REQUIRE(chain_psi_prime(0.5) == 0.0);
  REQUIRE(std::isfinite(chain_psi(0.5 + 1e-12)));
  REQUIRE(std::isfinite(chain_psi_prime(0.5 + 1e-12)));
  REQUIRE(chain_psi(0.5 + 1e-12) == 0.0);  // underflows cleanly
  REQUIRE(chain_psi(1.0) == Catch::Approx(1.0));
  // closed form of the scaled gaussian integral against quadrature
  const double x = 0.7;
  double acc = 0.0;
  const int steps = 200000;
  const double lo = -12.0;
  for (int i = 0; i < steps; ++i) {
    const double t0 = lo + (x - lo) * i / steps;
    const double t1 = lo + (x - lo) * (i + 1) / steps;
    acc += 0.5 * (std::exp(-0.5 * t0 * t0) + std::exp(-0.5 * t1 * t1)) *
           (t1 - t0);
  }
  REQUIRE(chain_phi(x) == Catch::Approx(kSqrtE * acc).epsilon(1e-8));
}

TEST_CASE("chain gradient matches finite differences", "[hard]") {
  RngStream rng{2};
  for (int t = 0; t < 20; ++t) {
    Vec x(6);
    for (double& v : x) v = 1.5 * rng.next_normal();
    const Vec g = ft_grad(x);
    const Vec fd = fd_gradient([](const Vec& y) { return ft_value(y); }, x);
    REQUIRE(dist(g, fd) <= 1e-5 * (1.0 + norm(g)));
  }
}

TEST_CASE("chain bounds hold at sampled points", "[hard]") {
  RngStream rng{6};
  const int T = 10;
  const double f0 = ft_value(Vec(T, 0.0));
  for (int t = 0; t < 1000; ++t) {
    Vec x(T);
    for (double& v : x) v = 2.0 * rng.next_normal();
    // gap
    REQUIRE(f0 - ft_value(x) <= kChainGapPerLevel * T);
    // sup-norm bound
    REQUIRE(norm_inf(ft_grad(x)) <= kChainGradSup);
    // smoothness along random pairs
    Vec y(T);
    for (double& v : y) v = 2.0 * rng.next_normal();
    REQUIRE(dist(ft_grad(x), ft_grad(y)) <=
            kChainSmoothness * dist(x, y) + 1e-9);
  }
  // zero-chain and large-gradient at partial progress
  for (int t = 0; t < 1000; ++t) {
    const int level = static_cast<int>(rng.next_index(T));
    const Vec x = point_with_prog(rng, T, level, 1.3);
    REQUIRE(prog(ft_grad(x)) <= prog(x) + 1);
    if (prog(x) < T) REQUIRE(norm(ft_grad(x)) > 1.0);
  }
}

TEST_CASE("scaled nonconvex instance matches its prescriptions", "[hard]") {
  const double L = 2.0, delta = 5000.0, sigma2 = 8.0, eps = 1e-3;
  const NonconvexHard h = make_nonconvex_hard(L, delta, sigma2, eps);
  REQUIRE(h.lambda == Catch::Approx(std::sqrt(2.0 * eps) * 152.0 / L));
  REQUIRE(h.T == static_cast<int>(std::floor(delta * L / (2.0 * eps * 152.0 * 12.0))));
  REQUIRE(h.p == Catch::Approx(std::min(2.0 * eps * 23.0 * 23.0 / sigma2, 1.0)));

  RngStream rng{8};
  // large gradient until full progress
  for (int t = 0; t < 1000; ++t) {
    const int level = static_cast<int>(rng.next_index(h.T));
    const Vec x = point_with_prog(rng, h.T, level, h.lambda);
    REQUIRE(h.problem.grad_norm_sq(x) > 2.0 * eps);
  }
  // bounded gap from the origin
  const double f0 = h.problem.value(Vec(h.T, 0.0));
  for (int t = 0; t < 1000; ++t) {
    Vec x(static_cast<std::size_t>(h.T));
    for (double& v : x) v = 2.0 * h.lambda * rng.next_normal();
    REQUIRE(f0 - h.problem.value(x) <= delta + 1e-9);
  }
  // estimator variance bound via exact enumeration
  for (int t = 0; t < 200; ++t) {
    const int level = static_cast<int>(rng.next_index(h.T));
    const Vec x = point_with_prog(rng, h.T, level, h.lambda);
    const auto [mean, second] =
        bernoulli_exact_moments(h.problem.grad(x), h.p, prog(x));
    REQUIRE(second <= sigma2 + 1e-12);
  }
  // degenerate parameters must fail loudly, never clamp
  REQUIRE_THROWS_AS(make_nonconvex_hard(1.0, 1.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("prox of the affine-max in dimension one", "[hard]") {
  // T = 0: y(x) = x - l/eta, f(x) = l x - l^2/(2 eta), grad = l
  const double l = 1.0, eta = 1.0;
  const Vec x = {0.0};
  const Vec y = convex_prox(x, l, eta);
  REQUIRE(y[0] == Catch::Approx(-1.0));
  REQUIRE(convex_hard_value(x, l, eta) == Catch::Approx(-0.5));
  Vec g;
  convex_hard_grad_into(x, l, eta, g);
  REQUIRE(g[0] == Catch::Approx(1.0));
}

TEST_CASE("prox satisfies its optimality conditions", "[hard]") {
  RngStream rng{12};
  const double l = 0.7, eta = 4.0;
  for (int t = 0; t < 100; ++t) {
    Vec x(9);
    for (double& v : x) v = 0.8 * rng.next_normal();
    const Vec lambda = convex_prox_weights(x, l, eta);
    // simplex membership
    double sum = 0.0;
    for (double w : lambda) {
      REQUIRE(w >= -1e-12);
      sum += w;
    }
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-10));
    // complementary slackness: active coordinates share the max value
    const double s = l * l / eta;
    Vec vals(x.size());
    double vmax = -1e300;
    for (std::size_t r = 0; r < x.size(); ++r) {
      vals[r] = l * x[r] - 5.0 * l * l * static_cast<double>(r) / eta -
                s * lambda[r];
      vmax = std::max(vmax, vals[r]);
    }
    for (std::size_t r = 0; r < x.size(); ++r) {
      REQUIRE(lambda[r] * (vmax - vals[r]) <= 1e-10);
    }
    // gradient identity grad = eta (x - y)
    const Vec y = convex_prox(x, l, eta);
    Vec g;
    convex_hard_grad_into(x, l, eta, g);
    Vec diff = sub(x, y);
    scale(diff, eta);
    REQUIRE(dist(g, diff) < 1e-10);
  }
}

TEST_CASE("prox agrees with the projected-gradient reference", "[hard]") {
  RngStream rng{23};
  for (int t = 0; t < 30; ++t) {
    const double l = 0.2 + rng.next_unit();
    const double eta = 1.0 + 5.0 * rng.next_unit();
    Vec x(7);
    for (double& v : x) v = rng.next_normal();
    const Vec mine = convex_prox(x, l, eta);
    const Vec ref = prox_reference(x, l, eta);
    REQUIRE(dist(mine, ref) < 1e-8);
  }
}

TEST_CASE("envelope gradient matches finite differences", "[hard]") {
  RngStream rng{31};
  const double l = 0.5, eta = 3.0;
  auto value = [&](const Vec& v) { return convex_hard_value(v, l, eta); };
  for (int t = 0; t < 100; ++t) {
    Vec x(6);
    for (double& v : x) v = 0.5 * rng.next_normal();
    Vec g;
    convex_hard_grad_into(x, l, eta, g);
    REQUIRE(dist(g, fd_gradient(value, x)) <= 1e-5 * (1.0 + norm(g)));
  }
}

TEST_CASE("prox keeps the zero-chain property", "[hard]") {
  RngStream rng{41};
  const double l = 0.6, eta = 2.5;
  for (int t = 0; t < 200; ++t) {
    const int level = static_cast<int>(rng.next_index(6));
    const Vec x = point_with_prog(rng, 8, level, 0.4);
    REQUIRE(prog(convex_prox(x, l, eta)) <= prog(x) + 1);
    Vec g;
    convex_hard_grad_into(x, l, eta, g);
    REQUIRE(prog(g) <= prog(x) + 1);
  }
}

TEST_CASE("convex instance matches its prescriptions", "[hard]") {
  const double M = 1.0, L = 500.0, eps = 0.01;
  const ConvexHard h = make_convex_hard(M, L, eps);
  const double t_lip = M * M / (64.0 * eps * eps) - 1.0;
  const double t_smooth = std::sqrt(L) / (std::sqrt(80.0 * eps)) - 1.0;
  REQUIRE(h.T == static_cast<int>(std::floor(std::min(t_lip, t_smooth))));
  const double levels = h.T + 1.0;
  REQUIRE(h.l == Catch::Approx(std::min(M, L / (10.0 * std::pow(levels, 1.5)))));
  REQUIRE(h.eta == Catch::Approx(10.0 * std::pow(levels, 1.5) * h.l));

  RngStream rng{3};
  // Lipschitz bound inside the unit ball
  for (int t = 0; t < 200; ++t) {
    Vec x(static_cast<std::size_t>(h.T + 1));
    for (double& v : x) v = rng.next_normal();
    const double nr = norm(x);
    scale(x, rng.next_unit() / std::max(nr, 1e-12));
    REQUIRE(norm(h.problem.grad(x)) <= h.l + 1e-9);
    REQUIRE(h.l <= M);
  }
  // minimum over the ball via the uniform witness direction
  Vec witness(static_cast<std::size_t>(h.T + 1),
              -1.0 / std::sqrt(levels));
  REQUIRE(h.problem.value(witness) <= -h.l / std::sqrt(levels) + 1e-12);
  // gap stays above 2 eps while progress is partial
  for (int t = 0; t < 200; ++t) {
    const int level = static_cast<int>(rng.next_index(h.T));
    Vec x = point_with_prog(rng, h.T + 1, level, 0.2);
    const double nr = norm(x);
    if (nr > 1.0) scale(x, 0.9 / nr);
    const double gap_lower =
        h.problem.value(x) + h.l / std::sqrt(levels);
    REQUIRE(gap_lower > 2.0 * eps);
  }
  REQUIRE_THROWS_AS(make_convex_hard(0.1, 1.0, 1.0), ConfigError);
}

TEST_CASE("heterogeneous instance matches its prescriptions", "[hard]") {
  const int n = 3;
  const WorkerPool pool({1.0, 2.0, 4.0});
  const double L = 1.0, delta = 30000.0, sigma2 = 5.0, eps = 1e-3;
  const HeterogHard h = make_heterog_hard(n, L, delta, sigma2, eps, pool);
  const double tau_sum = 7.0;
  REQUIRE(h.T == static_cast<int>(
                     std::floor(delta * L / (4.0 * eps * 152.0 * 12.0))));
  for (int i = 0; i < n; ++i) {
    REQUIRE(h.lambdas[static_cast<std::size_t>(i)] ==
            Catch::Approx(152.0 * std::sqrt(4.0 * eps * pool.delay(i)) /
                          (L * std::sqrt(tau_sum))));
    REQUIRE(h.probs[static_cast<std::size_t>(i)] ==
            Catch::Approx(std::min(
                9.0 * 529.0 * 4.0 * eps * pool.delay(i) / (sigma2 * tau_sum),
                1.0)));
  }

  RngStream rng{19};
  const int dim = n * h.T;
  // per-block smoothness estimate and global L-smoothness, sampled
  for (int t = 0; t < 200; ++t) {
    Vec x(static_cast<std::size_t>(dim)), y(static_cast<std::size_t>(dim));
    for (double& v : x) v = 0.05 * rng.next_normal();
    for (double& v : y) v = 0.05 * rng.next_normal();
    REQUIRE(dist(h.problem.grad(x), h.problem.grad(y)) <=
            L * dist(x, y) + 1e-9);
  }
  // gap at zero, sampled
  const double f0 = h.problem.value(Vec(dim, 0.0));
  for (int t = 0; t < 200; ++t) {
    Vec x(static_cast<std::size_t>(dim));
    for (double& v : x) v = 0.2 * rng.next_normal();
    REQUIRE(f0 - h.problem.value(x) <= delta + 1e-9);
  }
  // per-worker estimator variance, enumerated at block-partial points
  for (int t = 0; t < 100; ++t) {
    Vec x(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < n; ++i) {
      const int level = static_cast<int>(rng.next_index(h.T));
      for (int j = 0; j < level; ++j)
        x[static_cast<std::size_t>(i * h.T + j)] =
            h.lambdas[static_cast<std::size_t>(i)] * rng.next_normal();
    }
    for (int i = 0; i < n; ++i) {
      const auto& est = h.estimators[static_cast<std::size_t>(i)];
      RngStream s0 = RngContract{123}.draw_stream(0, 0, 0);
      Vec d1 = est.draw(x, s0);
      // two-outcome enumeration by brute force over the coin
      const Vec g = est.true_grad(x);
      const double pi = *est.coin_prob;
      Vec succ = g, fail = g;
      const int bp = heterog_block_prog(x, i, h.T);
      for (std::size_t j = static_cast<std::size_t>(i * h.T + bp);
           j < succ.size(); ++j) {
        succ[j] /= pi;
        fail[j] = 0.0;
      }
      const double second =
          pi * norm_sq(sub(succ, g)) + (1.0 - pi) * norm_sq(sub(fail, g));
      REQUIRE(second <= sigma2 + 1e-9);
      (void)d1;
    }
  }

  // single-block variant: gradient norm exceeds sqrt(eps) at partial progress
  const HeterogHard s1 = make_heterog_hard_single_block(4, 1.0, 10000.0, 1e-3);
  for (int t = 0; t < 200; ++t) {
    const int level = static_cast<int>(rng.next_index(s1.T));
    const Vec x = point_with_prog(rng, s1.T, level, s1.lambdas.back());
    REQUIRE(h.problem.dim > 0);
    REQUIRE(s1.problem.grad_norm_sq(x) > 1e-3);
  }
}
