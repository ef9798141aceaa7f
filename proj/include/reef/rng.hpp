#pragma once

#include <cstdint>
#include <random>

namespace reef {

// Seeded generator whose draws are identical on every platform: the
// engine is mt19937_64 and all distribution transforms are done here
// rather than through the implementation-defined <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent substream for (seed, stream), e.g. one per pair id.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi], unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (one draw per call).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace reef
