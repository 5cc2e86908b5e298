// Acceptance suite: every check prints one pass/fail line with its measured
// values. The same checks back the CLI's `verify` subcommand.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "vtlab/verify.hpp"

using namespace vtlab;

namespace {

void report(const CheckResult& r) {
  std::printf("%s criterion %s: %s -- %s\n", r.pass ? "[PASS]" : "[FAIL]",
              r.id.c_str(), r.name.c_str(), r.details.c_str());
  std::fflush(stdout);
}

}  // namespace

TEST_CASE("chain-instance invariants hold at sampled points", "[c1]") {
  const CheckResult r = check_hard_instance_invariants();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("coin estimator is exactly unbiased and variance-bounded", "[c2]") {
  const CheckResult r = check_estimator_exactness();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("methods converge within their prescribed iteration budgets",
          "[c3]") {
  const CheckResult r = check_theorem_convergence();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("measured collection times sit in the two-sided envelope", "[c4]") {
  const CheckResult r = check_collection_sandwich();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("threshold lemmas survive fuzzing", "[c5]") {
  const CheckResult r = check_lemma_fuzz();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("method ordering matches the scaled experiment", "[c6]") {
  const CheckResult r = check_figure_ordering();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("success-counting mechanics hold on seeded protocol runs", "[c7]") {
  const CheckResult r = check_lower_bound_mechanics();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("bound ratio grows at the predicted rate", "[c8]") {
  const CheckResult r = check_graph_oracle_trend();
  report(r);
  CHECK(r.pass);
}

TEST_CASE("identical configuration and seed reproduce identical bytes",
          "[c9]") {
  const CheckResult r = check_determinism();
  report(r);
  CHECK(r.pass);
}
