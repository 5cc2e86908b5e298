#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vtlab/adapter.hpp"
#include "vtlab/complexity.hpp"
#include "vtlab/event_sim.hpp"
#include "vtlab/problems.hpp"

using namespace vtlab;

TEST_CASE("single worker produces steps at delay multiples", "[event_sim]") {
  const ProblemSpec p = quadratic_problem(2);
  RennalaLogic logic(Vec{1.0, 0.0}, 0.5, 1);
  const WorkerPool pool({1.0});
  StopRule stop;
  stop.max_steps = 5;
  const Trace t = des_run(logic, pool, {exact_estimator(p)}, p, stop, 1);
  REQUIRE(t.steps.size() == 6);
  for (std::size_t i = 0; i < t.steps.size(); ++i)
    REQUIRE(t.steps[i].t == static_cast<double>(i));
}

TEST_CASE("slow worker reports arrive stale and are reassigned", "[event_sim]") {
  // delays (1, 3), batch 1: iterations march at the fast worker's pace; the
  // slow worker's t=3 report carries index 0 at iteration 2, gets ignored,
  // and the worker is put back to work on the current point
  const ProblemSpec p = quadratic_problem(2);
  RennalaLogic logic(Vec{1.0, 0.0}, 0.1, 1);
  const WorkerPool pool({1.0, 3.0});
  StopRule stop;
  stop.max_steps = 4;
  const Trace t = des_run(logic, pool, {exact_estimator(p)}, p, stop, 1);
  REQUIRE(t.steps[1].t == 1.0);
  REQUIRE(t.steps[2].t == 2.0);
  REQUIRE(t.steps[3].t == 3.0);
  // the slow worker delivered once by t=3 and its draw was wasted: four
  // steps needed five deliveries in total
  REQUIRE(t.per_worker_deliveries[1] == 1);
  REQUIRE(t.deliveries == 5);
}

TEST_CASE("identical seeds give identical traces", "[event_sim]") {
  const ProblemSpec p = quadratic_problem(5);
  const WorkerPool pool({1.0, 1.4, 2.2});
  StopRule stop;
  stop.max_steps = 40;
  auto run = [&]() {
    RennalaLogic logic(Vec(5, 1.0), 0.3, 3);
    return des_run(logic, pool, {gaussian_estimator(p, 1.0)}, p, stop, 99);
  };
  const Trace a = run();
  const Trace b = run();
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    REQUIRE(a.steps[i].t == b.steps[i].t);
    REQUIRE(a.steps[i].f == b.steps[i].f);
    REQUIRE(a.steps[i].grad_norm_sq == b.steps[i].grad_norm_sq);
  }
}

TEST_CASE("collection time measurements match hand traces", "[event_sim]") {
  REQUIRE(measure_collection_time(WorkerPool({1.0}), 2,
                                  CollectionRegime::Fresh) == 2.0);
  REQUIRE(measure_collection_time(WorkerPool({1.0}), 2,
                                  CollectionRegime::WorstCase) == 3.0);
  const WorkerPool two({1.0, 4.0});
  const double worst =
      measure_collection_time(two, 2, CollectionRegime::WorstCase);
  const auto [tp, j] = t_prime_min({1.0, 4.0}, 2.0);
  REQUIRE(worst <= 2.0 * tp);
  REQUIRE(tp == 3.0);
  REQUIRE(j == 1);
}

TEST_CASE("throughput never exceeds the counting bound", "[event_sim]") {
  const ProblemSpec p = quadratic_problem(3);
  const WorkerPool pool({1.0, 2.0, 3.5});
  StopRule stop;
  stop.max_time = 50.0;
  stop.max_steps = 100000;
  AsyncSgdLogic logic(Vec(3, 1.0), 0.01);
  const Trace t = des_run(logic, pool, {gaussian_estimator(p, 0.5)}, p, stop,
                          7);
  double bound = 0.0;
  for (int i = 0; i < pool.size(); ++i)
    bound += std::floor(50.0 / pool.delay(i));
  REQUIRE(static_cast<double>(t.deliveries) <= bound);
}

TEST_CASE("collection sandwich on random pools", "[event_sim]") {
  RngStream rng{123};
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_index(8));
    std::vector<double> taus;
    for (int i = 0; i < n; ++i) taus.push_back(0.1 + 5.0 * rng.next_unit());
    const WorkerPool pool(taus);
    const auto S = 1 + rng.next_index(100);

    std::vector<double> sorted = pool.delays;
    double inv = 0.0;
    for (double tau : sorted) inv += 1.0 / tau;

    const double worst =
        measure_collection_time(pool, S, CollectionRegime::WorstCase);
    const double fresh =
        measure_collection_time(pool, S, CollectionRegime::Fresh);
    const auto [tp, jstar] = t_prime_min(sorted, static_cast<double>(S));

    REQUIRE(fresh <= worst);
    REQUIRE(worst >= static_cast<double>(S) / inv - 1e-9);
    REQUIRE(worst <= 2.0 * tp + 1e-9);
    (void)jstar;
  }
}

TEST_CASE("workers slower than the collection window contribute nothing",
          "[event_sim]") {
  const WorkerPool pool({1.0, 1.0, 40.0});
  const double worst =
      measure_collection_time(pool, 10, CollectionRegime::WorstCase);
  REQUIRE(worst < 40.0);
  // replay the measurement counting per-worker contributions
  int slow_contribution = 0;
  for (int j = 2;; ++j) {
    const double t = 40.0 * j;
    if (t <= worst) ++slow_contribution;
    if (t > worst) break;
  }
  REQUIRE(slow_contribution == 0);
}

TEST_CASE("adapter and simulator produce identical runs", "[event_sim]") {
  const ProblemSpec p = quadratic_problem(4);
  const WorkerPool pool({1.0, 1.0, 2.5});
  const std::uint64_t seed = 31;
  const std::uint64_t K = 15;

  RennalaLogic des_logic(Vec(4, 1.0), 0.3, 4);
  StopRule stop;
  stop.max_steps = K;
  const Trace dt = des_run(des_logic, pool, {gaussian_estimator(p, 1.0)}, p,
                           stop, seed);

  RennalaLogic proto_logic(Vec(4, 1.0), 0.3, 4);
  ServerAdapter adapter(proto_logic, pool, K);
  StopRule pstop;
  pstop.max_steps = 100000;
  run_time_protocol(adapter, pool, {gaussian_estimator(p, 1.0)}, p,
                    OracleKind::Delayed, pstop, seed);

  REQUIRE(proto_logic.iteration() == des_logic.iteration());
  REQUIRE(proto_logic.iterate() == des_logic.iterate());
}

TEST_CASE("adapter honors protocol monotonicity on mixed pools",
          "[event_sim]") {
  const ProblemSpec p = quadratic_problem(3);
  const WorkerPool pool({0.7, 1.0, 1.0, 3.3});
  MaleniaLogic logic(Vec(3, 0.0), 0.2, 4);
  ServerAdapter adapter(logic, pool, 10);
  StopRule stop;
  stop.max_steps = 100000;
  // would throw on any non-monotone action
  const Trace t = run_time_protocol(adapter, pool,
                                    {gaussian_estimator(p, 0.3)}, p,
                                    OracleKind::Delayed, stop, 5);
  REQUIRE(logic.iteration() == 10);
  REQUIRE(check_zero_respecting(t).empty());
}

TEST_CASE("simulator refuses unbounded runs", "[event_sim]") {
  const ProblemSpec p = quadratic_problem(2);
  RennalaLogic logic(Vec(2, 1.0), 0.1, 1);
  const WorkerPool pool({1.0});
  StopRule stop;  // nothing set
  REQUIRE_THROWS_AS(des_run(logic, pool, {exact_estimator(p)}, p, stop, 1),
                    ConfigError);
}
