#pragma once

#include <cstdint>
#include <queue>
#include <vector>

#include "vtlab/optimizers.hpp"
#include "vtlab/protocol.hpp"

namespace vtlab {

// Completion event of one worker computation. Ties are processed in event
// creation order, so an in-flight computation scheduled earlier wins over one
// scheduled later at the same instant.
struct Event {
  VirtualTime time = 0.0;
  std::uint64_t seq = 0;
  int worker = 0;
  std::uint64_t tag = 0;
  std::uint64_t slot = 0;
  Vec x;  // the point the worker is computing at

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    return seq > o.seq;
  }
};

// Runs a server logic against fixed-delay workers. Worker i finishes exactly
// delay(i) seconds after receiving an assignment and reports the draw tagged
// with the assignment. Step records carry the metrics of each new iterate.
inline Trace des_run(ServerLogic& server, const WorkerPool& pool,
                     const std::vector<Estimator>& estimators,
                     const ProblemSpec& problem, const StopRule& stop,
                     std::uint64_t seed) {
  stop.validate();
  if (estimators.empty()) throw ConfigError("des_run: need an estimator");
  if (estimators.size() != 1 &&
      estimators.size() != static_cast<std::size_t>(pool.size()))
    throw ConfigError("des_run: one estimator, or one per worker");
  if (stop.target_metric == Metric::Suboptimality && !problem.f_star)
    throw ConfigError("suboptimality stop rule needs a known minimum");

  const RngContract rng{seed};
  const int n = pool.size();

  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue;
  std::uint64_t seq = 0;
  VirtualTime now = 0.0;
  std::vector<detail::RngCursor> cursors(static_cast<std::size_t>(n));

  auto assign = [&](const ServerLogic::Assignment& a) {
    Event e;
    e.time = now + pool.delay(a.worker);
    e.seq = seq++;
    e.worker = a.worker;
    e.tag = a.tag;
    e.slot = cursors[static_cast<std::size_t>(a.worker)].take(a.tag);
    e.x = a.x;
    queue.push(e);
  };

  Trace trace;
  trace.level = TraceLevel::Steps;
  trace.per_worker_deliveries.assign(static_cast<std::size_t>(n), 0);

  Vec grad_buf(static_cast<std::size_t>(problem.dim));
  auto record = [&](VirtualTime t) {
    const Vec& x = server.iterate();
    StepRecord r;
    r.k = server.iteration();
    r.t = t;
    r.f = problem.value(x);
    problem.grad_into(x, grad_buf);
    r.grad_norm_sq = norm_sq(grad_buf);
    r.prog = progress_index(x);
    r.delay = server.last_delay();
    trace.steps.push_back(r);
    return stop.metric_hit(problem.f_star ? r.f - *problem.f_star : r.f,
                           r.grad_norm_sq);
  };

  server.start(n, assign);
  record(0.0);

  Vec draw(static_cast<std::size_t>(problem.dim));
  while (!queue.empty()) {
    const Event e = queue.top();
    queue.pop();
    if (stop.max_time && e.time > *stop.max_time) break;
    now = e.time;

    const Estimator& est =
        estimators.size() == 1 ? estimators[0]
                               : estimators[static_cast<std::size_t>(e.worker)];
    RngStream stream =
        rng.draw_stream(static_cast<std::uint64_t>(e.worker), e.tag, e.slot);
    est.draw_into(e.x, stream, draw);
    ++trace.deliveries;
    ++trace.per_worker_deliveries[static_cast<std::size_t>(e.worker)];

    const std::uint64_t k_before = server.iteration();
    server.on_report(e.worker, draw, e.tag, assign);
    if (server.iteration() != k_before) {
      if (record(now)) break;
      if (stop.max_steps && server.iteration() >= *stop.max_steps) break;
    }
  }
  return trace;
}

enum class CollectionRegime { Fresh, WorstCase };

// Simulated first time at which S draws tagged with the current iteration
// have arrived. Fresh: every worker starts on the batch at time zero.
// Worst case: every worker first finishes one in-flight stale draw, so its
// j-th useful completion lands at (j + 1) tau_i.
inline VirtualTime measure_collection_time(const WorkerPool& pool,
                                           std::uint64_t S,
                                           CollectionRegime regime) {
  if (S < 1) throw ConfigError("collection time: S must be >= 1");
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  const double first_mult =
      regime == CollectionRegime::WorstCase ? 2.0 : 1.0;
  for (int i = 0; i < pool.size(); ++i)
    heap.push({first_mult * pool.delay(i), i});
  VirtualTime t = 0.0;
  for (std::uint64_t c = 0; c < S; ++c) {
    auto [when, i] = heap.top();
    heap.pop();
    t = when;
    heap.push({when + pool.delay(i), i});
  }
  return t;
}

}  // namespace vtlab
