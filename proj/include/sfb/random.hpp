#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "sfb/point.hpp"

namespace sfb {

/* Counter-based deterministic random stream.
 *
 * Draw i of the stream keyed by (master_seed, replication_id) is a pure
 * function of (key, i): the SplitMix64 output function applied at position i.
 * This makes replications order-independent and bit-reproducible: a stream can
 * be recreated anywhere from its SeedSpec, and concurrent replications never
 * share state. position() counts raw 64-bit draws, so two runs that made the
 * same calls are at the same position.
 */

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replication_id = 0;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Quantile function of the standard normal (Wichura's PPND16 rational
// approximations, accurate to ~1e-16 relative). p must lie in (0,1).
inline double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    x = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    x = num / den;
  }
  return q < 0.0 ? -x : x;
}

}  // namespace detail

class RandomStream {
 public:
  explicit RandomStream(SeedSpec seed)
      : key_(detail::mix64(detail::mix64(seed.master_seed) ^
                           (0x9E3779B97F4A7C15ull * (seed.replication_id + 1)))) {}

  std::uint64_t next_u64() {
    return detail::mix64(key_ + 0x9E3779B97F4A7C15ull * (++counter_));
  }

  // uniform on [2^-54, 1 - 2^-53 + 2^-54] subset of (0,1); one u64 per draw
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  // one u64 per draw (quantile transform, no rejection)
  double normal() { return detail::normal_quantile(uniform01()); }

  // uniform index in [0, n); one u64 per draw
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  Point normal_point(std::size_t dim) {
    Point p(dim);
    for (auto& x : p) x = normal();
    return p;
  }

  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline RandomStream derive_stream(std::uint64_t master_seed,
                                  std::uint64_t replication_id) {
  return RandomStream(SeedSpec{master_seed, replication_id});
}

}  // namespace sfb
