#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "vtlab/core.hpp"
#include "vtlab/oracles.hpp"

namespace vtlab {

// One algorithm decision: when to query, which worker, at which point.
// `control` drives the interruptible oracle, `tag` labels the randomness
// context of a computation started by this query, `done` ends the run.
struct AlgorithmAction {
  VirtualTime t = 0.0;
  int worker = 0;
  int control = 0;
  Vec x;
  std::uint64_t tag = 0;
  bool done = false;
};

// Interactive algorithm for the timed protocols. Called with the step index
// and the previous oracle answer (empty on the first call / no delivery).
struct TimeAlgorithm {
  virtual ~TimeAlgorithm() = default;
  virtual AlgorithmAction next(std::uint64_t k, const Vec& g_prev) = 0;
};

// Iteration-indexed algorithm for the classical protocol. Each query names
// its randomness context explicitly so that batched methods can be replayed
// against their timed counterparts.
struct ClassicalQuery {
  Vec x;
  std::uint64_t tag = 0;
  std::uint64_t slot = 0;
  bool done = false;
};

struct ClassicalAlgorithm {
  virtual ~ClassicalAlgorithm() = default;
  virtual ClassicalQuery next(std::uint64_t k, const Vec& g_prev) = 0;
};

enum class OracleKind { Delayed, Interruptible, Sync };

enum class TraceLevel { Steps, Full };

// Per protocol step record. `t_avail` is the timestamp at which the queried
// point counts as known (the time emitted by the previous step, 0 for x^0).
struct ProtocolEvent {
  std::uint64_t k = 0;
  VirtualTime t = 0.0;
  VirtualTime t_avail = 0.0;
  int worker = 0;
  OracleBranch branch = OracleBranch::Pending;
  double f = 0.0;
  double grad_norm_sq = 0.0;
  int prog_x = 0;
  int stored_prog = -1;
  int xi = -1;
  int sync_count = -1;
  std::uint64_t tag = 0;
  std::vector<int> supp_x;
  std::vector<int> supp_g;
};

// Per server iteration record for simulator runs.
struct StepRecord {
  std::uint64_t k = 0;
  VirtualTime t = 0.0;
  double f = 0.0;
  double grad_norm_sq = 0.0;
  int prog = 0;
  int delay = -1;
};

struct Trace {
  TraceLevel level = TraceLevel::Steps;
  std::vector<ProtocolEvent> events;  // timed protocol runs (full level)
  std::vector<StepRecord> steps;      // iterate metrics over the run
  std::uint64_t deliveries = 0;       // gradients handed to the algorithm
  std::uint64_t wasted_sync_rounds = 0;
  std::vector<std::uint64_t> per_worker_deliveries;
};

// --- the complexity measure --------------------------------------------------

// First time t at which some iterate known by t satisfies the criterion.
// Uses protocol events when present, otherwise simulator step records.
inline std::optional<VirtualTime> measure_time_to_epsilon(
    const Trace& trace, Metric metric, double eps,
    std::optional<double> f_star = std::nullopt) {
  if (!(eps > 0.0)) throw ConfigError("time-to-epsilon: eps must be positive");
  auto value_of = [&](double f, double gns) {
    if (metric == Metric::GradNormSq) return gns;
    if (!f_star) throw ConfigError("time-to-epsilon: f* unknown");
    return f - *f_star;
  };
  if (!trace.events.empty()) {
    for (const auto& e : trace.events) {
      if (value_of(e.f, e.grad_norm_sq) <= eps) return e.t_avail;
    }
    return std::nullopt;
  }
  for (const auto& s : trace.steps) {
    if (value_of(s.f, s.grad_norm_sq) <= eps) return s.t;
  }
  return std::nullopt;
}

// --- monitors -----------------------------------------------------------------

struct ZeroRespectingViolation {
  std::uint64_t k;
  int coordinate;
};

// supp(x^k) must stay inside the union of supports of gradients received
// strictly before step k. Requires a full-level trace.
inline std::vector<ZeroRespectingViolation> check_zero_respecting(
    const Trace& trace) {
  if (trace.level != TraceLevel::Full)
    throw ConfigError("zero-respecting check needs a full trace");
  std::vector<ZeroRespectingViolation> violations;
  std::set<int> seen;
  for (const auto& e : trace.events) {
    for (int c : e.supp_x) {
      if (!seen.count(c)) violations.push_back({e.k, c});
    }
    for (int c : e.supp_g) seen.insert(c);
  }
  return violations;
}

// The m smallest elements of the multiset { j * tau_i : j >= 1 }, ascending.
inline std::vector<VirtualTime> earliest_completion_times(
    const WorkerPool& pool, std::size_t m) {
  if (m < 1) throw ConfigError("earliest_completion_times: m must be >= 1");
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  for (int i = 0; i < pool.size(); ++i) heap.push({pool.delay(i), i});
  std::vector<VirtualTime> out;
  out.reserve(m);
  while (out.size() < m) {
    auto [t, i] = heap.top();
    heap.pop();
    out.push_back(t);
    heap.push({t + pool.delay(i), i});
  }
  return out;
}

// Success-counting ledger over a run with a coin-based oracle. For each
// progress level j it keeps the index of the first successful coin flipped
// at level j-1 and checks the reached time against the earliest times the
// pool could have produced that many coins.
struct SuccessLedger {
  struct Level {
    int level = 0;                 // j
    std::uint64_t eta = 0;         // index of the first success at level j-1
    VirtualTime t_hat_eta = 0.0;   // eta-th earliest completion time
    VirtualTime t_reached = 0.0;   // availability time of the first iterate
                                   // with prog = j
  };
  std::vector<Level> levels;
  bool counting_bound_holds = true;   // t_reached(j) >= sum_{i<=j} t_hat(eta_i)
  bool prog_within_successes = true;  // prog never exceeds consumed successes
};

inline SuccessLedger success_ledger(const Trace& trace,
                                    const WorkerPool& pool) {
  if (trace.level != TraceLevel::Full)
    throw ConfigError("success ledger needs a full trace");
  SuccessLedger ledger;

  // Deliveries that consumed a coin, in protocol order, per stored level.
  std::vector<std::uint64_t> draws_at_level;  // count of coins seen per level
  std::vector<std::optional<std::uint64_t>> eta;  // first success per level
  std::uint64_t successes_seen = 0;
  int max_prog = 0;
  std::vector<std::pair<int, VirtualTime>> reach;  // (level, time) firsts

  for (const auto& e : trace.events) {
    if (e.prog_x > max_prog) {
      for (int j = max_prog + 1; j <= e.prog_x; ++j)
        reach.push_back({j, e.t_avail});
      max_prog = e.prog_x;
      if (static_cast<std::uint64_t>(max_prog) > successes_seen)
        ledger.prog_within_successes = false;
    }
    if (e.branch == OracleBranch::Deliver && e.xi >= 0) {
      const auto lvl = static_cast<std::size_t>(e.stored_prog);
      if (draws_at_level.size() <= lvl) {
        draws_at_level.resize(lvl + 1, 0);
        eta.resize(lvl + 1);
      }
      ++draws_at_level[lvl];
      if (e.xi == 1) {
        ++successes_seen;
        if (!eta[lvl]) eta[lvl] = draws_at_level[lvl];
      }
    }
  }

  std::uint64_t max_eta = 1;
  for (const auto& [level, t] : reach) {
    const auto lvl = static_cast<std::size_t>(level - 1);
    if (lvl < eta.size() && eta[lvl]) max_eta = std::max(max_eta, *eta[lvl]);
  }
  const auto t_hat = earliest_completion_times(pool, max_eta);

  double cumulative = 0.0;
  for (const auto& [level, t] : reach) {
    const auto lvl = static_cast<std::size_t>(level - 1);
    if (lvl >= eta.size() || !eta[lvl]) {
      // Progress without any successful coin at the previous level.
      ledger.prog_within_successes = false;
      ledger.counting_bound_holds = false;
      break;
    }
    SuccessLedger::Level entry;
    entry.level = level;
    entry.eta = *eta[lvl];
    entry.t_hat_eta = t_hat[entry.eta - 1];
    entry.t_reached = t;
    cumulative += entry.t_hat_eta;
    if (t < cumulative - 1e-9) ledger.counting_bound_holds = false;
    ledger.levels.push_back(entry);
  }
  return ledger;
}

// --- protocol runners ----------------------------------------------------------

namespace detail {

struct RngCursor {
  std::uint64_t tag = 0;
  std::uint64_t slot = 0;
  bool used = false;

  std::uint64_t take(std::uint64_t new_tag) {
    if (!used || new_tag != tag) {
      used = true;
      tag = new_tag;
      slot = 0;
      return 0;
    }
    return ++slot;
  }
};

}  // namespace detail

// Timed multi-oracle run. Estimators: one shared or one per worker.
inline Trace run_time_protocol(TimeAlgorithm& alg, const WorkerPool& pool,
                               const std::vector<Estimator>& estimators,
                               const ProblemSpec& problem, OracleKind kind,
                               const StopRule& stop, std::uint64_t seed,
                               TraceLevel level = TraceLevel::Full) {
  stop.validate();
  if (estimators.empty())
    throw ConfigError("run_time_protocol: need at least one estimator");
  if (estimators.size() != 1 &&
      estimators.size() != static_cast<std::size_t>(pool.size()))
    throw ConfigError("run_time_protocol: one estimator, or one per worker");
  if (stop.target_metric == Metric::Suboptimality && !problem.f_star)
    throw ConfigError("suboptimality stop rule needs a known minimum");

  const RngContract rng{seed};
  const int n = pool.size();
  std::vector<OracleState> states(kind == OracleKind::Sync
                                      ? 1
                                      : static_cast<std::size_t>(n));
  std::vector<detail::RngCursor> cursors(static_cast<std::size_t>(n));

  Trace trace;
  trace.level = level;
  trace.per_worker_deliveries.assign(static_cast<std::size_t>(n), 0);

  Vec g_prev;
  Vec grad_buf(static_cast<std::size_t>(problem.dim));
  VirtualTime t_prev = 0.0;

  for (std::uint64_t k = 0;; ++k) {
    if (stop.max_steps && k >= *stop.max_steps) break;
    AlgorithmAction a = alg.next(k, g_prev);
    if (a.done) break;
    if (a.t < t_prev)
      throw ProtocolViolation(
          k, "time travel at step " + std::to_string(k) + ": t=" +
                 std::to_string(a.t) + " after t=" + std::to_string(t_prev));
    if (kind != OracleKind::Sync && (a.worker < 0 || a.worker >= n))
      throw ProtocolViolation(k, "worker index out of range at step " +
                                     std::to_string(k));
    if (stop.max_time && a.t > *stop.max_time) break;

    const Estimator& est =
        estimators.size() == 1 ? estimators[0]
                               : estimators[static_cast<std::size_t>(a.worker)];

    OracleOutcome out;
    switch (kind) {
      case OracleKind::Delayed:
      case OracleKind::Interruptible: {
        auto& s = states[static_cast<std::size_t>(a.worker)];
        const bool starts =
            !s.busy() && !(kind == OracleKind::Interruptible && a.control == 1);
        DrawContext ctx{a.worker, a.tag,
                        starts ? cursors[static_cast<std::size_t>(a.worker)]
                                     .take(a.tag)
                               : 0};
        out = kind == OracleKind::Delayed
                  ? delayed_oracle_step(a.t, a.x, ctx, s, pool.delay(a.worker),
                                        est, rng)
                  : interruptible_oracle_step(a.t, a.x, ctx, a.control, s,
                                              pool.delay(a.worker), est, rng);
        break;
      }
      case OracleKind::Sync: {
        out = sync_oracle_step(a.t, a.x, a.tag, states[0], pool, est, rng);
        if (out.branch == OracleBranch::Deliver && out.sync_count == 0)
          ++trace.wasted_sync_rounds;
        break;
      }
    }

    const double f = problem.value(a.x);
    problem.grad_into(a.x, grad_buf);
    const double gns = norm_sq(grad_buf);

    ProtocolEvent ev;
    ev.k = k;
    ev.t = a.t;
    ev.t_avail = t_prev;
    ev.worker = kind == OracleKind::Sync ? -1 : a.worker;
    ev.branch = out.branch;
    ev.f = f;
    ev.grad_norm_sq = gns;
    ev.prog_x = progress_index(a.x);
    ev.stored_prog = out.stored_prog;
    ev.xi = out.xi;
    ev.sync_count = out.sync_count;
    // deliveries carry the tag of the computation they belong to
    ev.tag = out.delivered() ? out.ctx.tag : a.tag;
    if (level == TraceLevel::Full) {
      ev.supp_x = support(a.x);
      ev.supp_g = support(out.gradient);
    }
    if (out.delivered()) {
      // a synchronized delivery hands over sync_count draws at once
      trace.deliveries += out.sync_count >= 0
                              ? static_cast<std::uint64_t>(out.sync_count)
                              : 1;
      if (ev.worker >= 0)
        ++trace.per_worker_deliveries[static_cast<std::size_t>(ev.worker)];
    }
    trace.steps.push_back({k, t_prev, f, gns, ev.prog_x, -1});
    if (level == TraceLevel::Full) trace.events.push_back(std::move(ev));

    const double sub = problem.f_star ? f - *problem.f_star : f;
    if (stop.metric_hit(sub, gns)) {
      t_prev = a.t;
      break;
    }

    g_prev = out.gradient.empty() ? Vec(static_cast<std::size_t>(problem.dim), 0.0)
                                  : std::move(out.gradient);
    t_prev = a.t;
  }
  return trace;
}

// Classical iteration-indexed run: one oracle call per step.
inline Trace run_classical_protocol(ClassicalAlgorithm& alg,
                                    const Estimator& est,
                                    const ProblemSpec& problem,
                                    const StopRule& stop, std::uint64_t seed) {
  stop.validate();
  if (stop.target_metric == Metric::Suboptimality && !problem.f_star)
    throw ConfigError("suboptimality stop rule needs a known minimum");
  const RngContract rng{seed};
  Trace trace;
  trace.level = TraceLevel::Steps;
  Vec g_prev;
  Vec grad_buf(static_cast<std::size_t>(problem.dim));
  for (std::uint64_t k = 0;; ++k) {
    if (stop.max_steps && k >= *stop.max_steps) break;
    ClassicalQuery q = alg.next(k, g_prev);
    if (q.done) break;

    const double f = problem.value(q.x);
    problem.grad_into(q.x, grad_buf);
    const double gns = norm_sq(grad_buf);
    trace.steps.push_back({k, static_cast<VirtualTime>(k), f, gns,
                           progress_index(q.x), -1});

    RngStream stream = rng.draw_stream(0, q.tag, q.slot);
    g_prev.resize(q.x.size());
    est.draw_into(q.x, stream, g_prev);
    ++trace.deliveries;

    const double sub = problem.f_star ? f - *problem.f_star : f;
    if (stop.metric_hit(sub, gns)) break;
  }
  return trace;
}

// Timed wrapper around a classical algorithm for a single oracle with delay
// tau: even steps start the computation at the classical iterate, odd steps
// collect it one delay later.
struct WrappedClassical : TimeAlgorithm {
  ClassicalAlgorithm& inner;
  double tau;
  int dim;

  WrappedClassical(ClassicalAlgorithm& a, double delay, int d)
      : inner(a), tau(delay), dim(d) {}

  AlgorithmAction next(std::uint64_t k, const Vec& g_prev) override {
    AlgorithmAction a;
    a.worker = 0;
    if (k % 2 == 0) {
      const std::uint64_t j = k / 2;
      ClassicalQuery q = inner.next(j, g_prev);
      if (q.done) {
        a.done = true;
        return a;
      }
      a.t = tau * static_cast<double>(j);
      a.x = std::move(q.x);
      a.tag = q.tag;
    } else {
      a.t = tau * static_cast<double>(k / 2 + 1);
      a.x.assign(static_cast<std::size_t>(dim), 0.0);
      a.tag = k / 2;
    }
    return a;
  }
};

}  // namespace vtlab
