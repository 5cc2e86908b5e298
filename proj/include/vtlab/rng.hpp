#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace vtlab {

// Counter-derived random stream. Every stochastic-gradient draw gets its own
// stream, keyed by (master seed, worker, assignment tag, draw slot), so the
// values a draw sees do not depend on how runs interleave other draws. This
// is what makes a single-worker batched run bit-identical to the same method
// executed through the simulator.
struct RngStream {
  std::uint64_t state = 0;
  double spare = 0.0;
  bool has_spare = false;

  static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    state += golden;
    return mix(state);
  }

  // Uniform on (0, 1]; never returns 0 so it is safe inside log().
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, spare cached for the next call.
  double next_normal() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
  }

  bool next_bernoulli(double p) { return next_unit() <= p; }

  std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

  // UniformRandomBitGenerator interface, handy for std::shuffle and friends.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next_u64(); }
};

// Deterministic randomness source for a whole run. Identical master seed and
// identical draw contexts reproduce identical values, independent of what
// other workers did in between.
struct RngContract {
  std::uint64_t master = 0;

  static std::uint64_t chain(std::uint64_t s, std::uint64_t v) {
    return RngStream::mix(s + RngStream::golden * (v + 1));
  }

  RngStream draw_stream(std::uint64_t worker, std::uint64_t tag,
                        std::uint64_t slot) const {
    std::uint64_t s = RngStream::mix(master + RngStream::golden);
    s = chain(s, worker);
    s = chain(s, tag);
    s = chain(s, slot);
    return RngStream{s};
  }

  // Generic labelled stream for anything that is not a gradient draw.
  RngStream stream(std::uint64_t a, std::uint64_t b = 0,
                   std::uint64_t c = 0) const {
    std::uint64_t s = RngStream::mix(master ^ 0x5bf03635u);
    s = chain(s, a);
    s = chain(s, b);
    s = chain(s, c);
    return RngStream{s};
  }
};

}  // namespace vtlab
