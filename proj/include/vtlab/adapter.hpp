#pragma once

#include <deque>
#include <queue>

#include "vtlab/event_sim.hpp"
#include "vtlab/optimizers.hpp"
#include "vtlab/protocol.hpp"

namespace vtlab {

// Turns a server-style method into a timed-protocol algorithm. The adapter
// knows the pool's fixed delays, so it emits each worker's query exactly at
// that worker's completion time: one query to collect the finished draw,
// immediately followed by one query to start the next assignment at the same
// instant. Completion ties resolve in scheduling order, matching the
// simulator, so both executions produce identical iterate sequences.
struct ServerAdapter : TimeAlgorithm {
  ServerLogic& server;
  const WorkerPool& pool;
  std::uint64_t max_iterations;

  struct Pending {
    VirtualTime time = 0.0;
    std::uint64_t seq = 0;
    int worker = 0;
    std::uint64_t tag = 0;
    bool operator>(const Pending& o) const {
      if (time != o.time) return time > o.time;
      return seq > o.seq;
    }
  };

  std::priority_queue<Pending, std::vector<Pending>, std::greater<Pending>>
      completions;
  std::deque<AlgorithmAction> queued;  // start actions awaiting emission
  std::uint64_t seq = 0;
  VirtualTime now = 0.0;
  bool started = false;
  // Collect emitted and waiting for its oracle answer.
  bool collecting = false;
  Pending in_flight;

  ServerAdapter(ServerLogic& s, const WorkerPool& p,
                std::uint64_t max_iters = ~0ull)
      : server(s), pool(p), max_iterations(max_iters) {}

  void push_assignment(const ServerLogic::Assignment& a) {
    AlgorithmAction act;
    act.t = now;
    act.worker = a.worker;
    act.x = a.x;
    act.tag = a.tag;
    queued.push_back(std::move(act));
    completions.push(
        {now + pool.delay(a.worker), seq++, a.worker, a.tag});
  }

  AlgorithmAction next(std::uint64_t /*k*/, const Vec& g_prev) override {
    if (!started) {
      started = true;
      server.start(pool.size(),
                   [this](const ServerLogic::Assignment& a) {
                     push_assignment(a);
                   });
    } else if (collecting) {
      collecting = false;
      server.on_report(in_flight.worker, g_prev, in_flight.tag,
                       [this](const ServerLogic::Assignment& a) {
                         push_assignment(a);
                       });
    }

    if (server.iteration() >= max_iterations) {
      AlgorithmAction done;
      done.done = true;
      return done;
    }

    if (!queued.empty()) {
      AlgorithmAction act = std::move(queued.front());
      queued.pop_front();
      return act;
    }
    if (completions.empty()) {
      AlgorithmAction done;
      done.done = true;
      return done;
    }

    in_flight = completions.top();
    completions.pop();
    collecting = true;
    now = in_flight.time;
    AlgorithmAction act;
    act.t = now;
    act.worker = in_flight.worker;
    act.x = server.iterate();  // metrics are taken at the current iterate
    act.tag = in_flight.tag;
    return act;
  }
};

}  // namespace vtlab
