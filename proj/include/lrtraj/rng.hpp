#pragma once

#include <cstdint>
#include <random>

namespace lrtraj {

/* Deterministic RNG stream. Engine state is a mt19937_64 seeded through
 * splitmix64 so that streams derived from (seed, id...) are decorrelated.
 * Distribution transforms are implemented here rather than taken from
 * <random> so the draw sequence is identical across standard libraries. */
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /* Named substream: same (seed, a, b, c) always yields the same stream.
   * Used to give every chain, superchain and imputation copy a private
   * generator that does not depend on execution order. */
  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                    std::uint64_t c = 0);

  std::uint64_t bits();                 // raw 64 bits
  double uniform();                     // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);
  double normal();                      // standard normal, polar method
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential();                 // rate 1
  double gamma(double shape);           // scale 1, Marsaglia-Tsang
  double chisq(double df) { return 2.0 * gamma(0.5 * df); }
  double cauchy();                      // standard Cauchy
  /* Standard normal truncated to (lower, +inf). */
  double truncatedNormalLower(double lower);
  /* N(mean, sd^2) truncated to (lower, +inf). */
  double truncatedNormal(double mean, double sd, double lower);
  std::uint64_t integer(std::uint64_t n);  // uniform on {0, ..., n-1}

 private:
  std::mt19937_64 eng_;
};

}  // namespace lrtraj
