#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vtlab/core.hpp"
#include "vtlab/estimators.hpp"

namespace vtlab {

// Context identifying one stochastic-gradient computation for randomness
// derivation: worker index, assignment tag, and the worker's draw counter
// under that tag.
struct DrawContext {
  int worker = 0;
  std::uint64_t tag = 0;
  std::uint64_t slot = 0;
};

// Worker-side state of an in-flight computation. Idle means the triple is
// zeroed; busy keeps the start time and the point the draw belongs to.
struct OracleState {
  VirtualTime s_t = 0.0;
  Vec s_x;
  int s_q = 0;
  DrawContext s_ctx;

  bool busy() const { return s_q == 1; }

  void reset() {
    s_t = 0.0;
    s_x.clear();
    s_q = 0;
    s_ctx = DrawContext{};
  }

  void start(VirtualTime t, const Vec& x, DrawContext ctx) {
    s_t = t;
    s_x = x;
    s_q = 1;
    s_ctx = ctx;
  }
};

enum class OracleBranch { Start, Pending, Deliver, Interrupt };

struct OracleOutcome {
  OracleBranch branch = OracleBranch::Pending;
  Vec gradient;               // empty means the zero vector
  DrawContext ctx;            // context of a delivered draw
  int stored_prog = -1;       // prog of the stored point at delivery
  int xi = -1;                // coin outcome when the estimator is coin-based
  int sync_count = -1;        // number of summed draws (synchronized oracle)
  bool delivered() const { return branch == OracleBranch::Deliver; }
};

namespace detail {

inline OracleOutcome deliver_draw(OracleState& s, double /*tau*/,
                                  const Estimator& est,
                                  const RngContract& rng) {
  OracleOutcome out;
  out.branch = OracleBranch::Deliver;
  out.ctx = s.s_ctx;
  out.stored_prog = progress_index(s.s_x);
  RngStream stream = rng.draw_stream(
      static_cast<std::uint64_t>(s.s_ctx.worker), s.s_ctx.tag, s.s_ctx.slot);
  if (est.coin_prob) {
    RngStream peek = stream;
    out.xi = peek.next_bernoulli(*est.coin_prob) ? 1 : 0;
  }
  out.gradient.resize(s.s_x.size());
  est.draw_into(s.s_x, stream, out.gradient);
  s.reset();
  return out;
}

}  // namespace detail

// Delayed single-worker oracle: idle queries start a computation, busy
// queries before the deadline return nothing, queries at or after
// start + tau deliver the draw evaluated at the stored point.
inline OracleOutcome delayed_oracle_step(VirtualTime t, const Vec& x,
                                         DrawContext ctx, OracleState& s,
                                         double tau, const Estimator& est,
                                         const RngContract& rng) {
  if (!s.busy()) {
    s.start(t, x, ctx);
    return OracleOutcome{.branch = OracleBranch::Start};
  }
  if (t < s.s_t + tau) return OracleOutcome{.branch = OracleBranch::Pending};
  return detail::deliver_draw(s, tau, est, rng);
}

// Same transition with a control bit: control = 1 discards the in-flight
// computation and resets the state.
inline OracleOutcome interruptible_oracle_step(VirtualTime t, const Vec& x,
                                               DrawContext ctx, int control,
                                               OracleState& s, double tau,
                                               const Estimator& est,
                                               const RngContract& rng) {
  if (control == 1) {
    s.reset();
    return OracleOutcome{.branch = OracleBranch::Interrupt};
  }
  return delayed_oracle_step(t, x, ctx, s, tau, est, rng);
}

// Synchronized-start oracle over the whole pool. A busy query collects the
// draws of every worker whose deadline has passed and resets the state, so a
// round queried too early is wasted outright.
inline OracleOutcome sync_oracle_step(VirtualTime t, const Vec& x,
                                      std::uint64_t tag, OracleState& s,
                                      const WorkerPool& pool,
                                      const Estimator& est,
                                      const RngContract& rng) {
  if (!s.busy()) {
    s.start(t, x, DrawContext{0, tag, 0});
    return OracleOutcome{.branch = OracleBranch::Start};
  }
  int count = 0;
  for (int i = 0; i < pool.size(); ++i) {
    if (t >= s.s_t + pool.delay(i))
      ++count;
    else
      break;
  }
  OracleOutcome out;
  out.branch = OracleBranch::Deliver;
  out.ctx = s.s_ctx;
  out.stored_prog = progress_index(s.s_x);
  out.sync_count = count;
  out.gradient.assign(s.s_x.size(), 0.0);
  Vec draw(s.s_x.size());
  for (int i = 0; i < count; ++i) {
    RngStream stream =
        rng.draw_stream(static_cast<std::uint64_t>(i), s.s_ctx.tag, 0);
    est.draw_into(s.s_x, stream, draw);
    axpy(1.0, draw, out.gradient);
  }
  s.reset();
  return out;
}

}  // namespace vtlab
