#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "vtlab/protocol.hpp"

namespace vtlab {

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Per-protocol-event export.
inline void write_protocol_csv(const Trace& trace, std::ostream& out) {
  out << "k,t,worker,event,f,grad_norm_sq,prog\n";
  auto name = [](OracleBranch b) {
    switch (b) {
      case OracleBranch::Start: return "start";
      case OracleBranch::Pending: return "pending";
      case OracleBranch::Deliver: return "deliver";
      case OracleBranch::Interrupt: return "interrupt";
    }
    return "?";
  };
  for (const auto& e : trace.events) {
    out << e.k << ',' << detail::fmt_double(e.t) << ',' << e.worker << ','
        << name(e.branch) << ',' << detail::fmt_double(e.f) << ','
        << detail::fmt_double(e.grad_norm_sq) << ',' << e.prog_x << '\n';
  }
}

// Per-iterate export with the fixed downstream column contract.
inline void write_run_csv(const std::string& run_id, const std::string& method,
                          int n, std::uint64_t seed, const Trace& trace,
                          std::ostream& out, bool header = true) {
  if (header) out << "run_id,method,n,seed,k,virtual_time,f,grad_norm_sq,prog,delay\n";
  for (const auto& s : trace.steps) {
    out << run_id << ',' << method << ',' << n << ',' << seed << ',' << s.k
        << ',' << detail::fmt_double(s.t) << ',' << detail::fmt_double(s.f)
        << ',' << detail::fmt_double(s.grad_norm_sq) << ',' << s.prog << ','
        << s.delay << '\n';
  }
}

inline nlohmann::json ledger_to_json(const SuccessLedger& ledger) {
  nlohmann::json j;
  j["counting_bound_holds"] = ledger.counting_bound_holds;
  j["prog_within_successes"] = ledger.prog_within_successes;
  j["levels"] = nlohmann::json::array();
  for (const auto& lvl : ledger.levels) {
    j["levels"].push_back({{"level", lvl.level},
                           {"eta", lvl.eta},
                           {"t_hat_eta", lvl.t_hat_eta},
                           {"t_reached", lvl.t_reached}});
  }
  return j;
}

}  // namespace vtlab
