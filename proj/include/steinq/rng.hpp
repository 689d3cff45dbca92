#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace steinq {

namespace detail {

// SplitMix64 finalizer (Stafford mix 13).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

/// Counter-based random stream. The state is a pure function of
/// (seed, stream id, counter), so replication k of a Monte Carlo run can be
/// handed `RandomStream(seed).substream(k)` and the results do not depend on
/// how replications are scheduled across threads.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                           detail::mix64(stream * 0xD1342543DE82EF95ULL + 1))) {}

  /// Child stream k; independent of this stream for distinct k.
  RandomStream substream(std::uint64_t k) const {
    RandomStream s(0);
    s.key_ = detail::mix64(key_ ^ detail::mix64((k + 1) * detail::kGolden));
    s.counter_ = 0;
    s.haveSpare_ = false;
    return s;
  }

  std::uint64_t nextU64() { return detail::mix64(key_ + (++counter_) * detail::kGolden); }

  /// Uniform on (0,1), never exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(nextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double gaussian() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(th);
    haveSpare_ = true;
    return r * std::cos(th);
  }

  double exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential: rate must be > 0");
    return -std::log(uniform()) / rate;
  }

  /// Poisson variate. Inversion below mean 10, Hormann's PTRD above.
  long poisson(double mean) {
    if (!(mean >= 0)) throw std::invalid_argument("poisson: mean must be >= 0");
    if (mean == 0) return 0;
    if (mean < 10.0) {
      const double target = std::exp(-mean);
      long k = 0;
      double prod = uniform();
      while (prod > target) {
        prod *= uniform();
        ++k;
      }
      return k;
    }
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double invAlpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<long>(k);
      if (k < 0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * invAlpha / (a / (us * us) + b)) <=
          k * std::log(mean) - mean - std::lgamma(k + 1.0))
        return static_cast<long>(k);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool haveSpare_ = false;
  double spare_ = 0.0;
};

}  // namespace steinq
