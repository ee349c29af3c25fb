#include "lrtraj/rng.hpp"

#include <cmath>

namespace lrtraj {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 engineFrom(std::uint64_t s0, std::uint64_t s1, std::uint64_t s2,
                           std::uint64_t s3) {
  std::uint64_t x = s0;
  x = splitmix64(x) ^ s1;
  x = splitmix64(x) ^ s2;
  x = splitmix64(x) ^ s3;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x))};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : eng_(engineFrom(seed, 0, 0, 0)) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                std::uint64_t c) {
  Rng r(0);
  r.eng_ = engineFrom(seed, a, b, c);
  return r;
}

std::uint64_t Rng::bits() { return eng_(); }

double Rng::uniform() {
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  /* Marsaglia polar, second deviate discarded to keep the stream
   * position-independent of call history. */
  for (;;) {
    double u = 2.0 * uniform() - 1.0;
    double v = 2.0 * uniform() - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double Rng::exponential() {
  for (;;) {
    double u = uniform();
    if (u > 0.0) return -std::log(u);
  }
}

double Rng::gamma(double shape) {
  if (shape < 1.0) {
    /* boost: G(a) = G(a+1) * U^{1/a} */
    double u;
    do { u = uniform(); } while (u <= 0.0);
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u;
    do { u = uniform(); } while (u <= 0.0);
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double Rng::cauchy() { return std::tan(3.14159265358979323846 * (uniform() - 0.5)); }

double Rng::truncatedNormalLower(double lower) {
  if (lower <= 0.0) {
    /* rejection from the untruncated normal; acceptance >= 1/2 */
    for (;;) {
      double z = normal();
      if (z > lower) return z;
    }
  }
  /* Robert (1995) translated-exponential rejection for the upper tail */
  double a = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    double z = lower + exponential() / a;
    double rho = std::exp(-0.5 * (z - a) * (z - a));
    if (uniform() <= rho) return z;
  }
}

double Rng::truncatedNormal(double mean, double sd, double lower) {
  return mean + sd * truncatedNormalLower((lower - mean) / sd);
}

std::uint64_t Rng::integer(std::uint64_t n) {
  /* unbiased via rejection */
  std::uint64_t limit = ~0ULL - (~0ULL % n);
  for (;;) {
    std::uint64_t x = eng_();
    if (x < limit) return x % n;
  }
}

}  // namespace lrtraj
