#pragma once

#include <cmath>
#include <cstdint>

#include "ngrad/common.hpp"

namespace ngrad {

// Counter-based random numbers: every draw is a pure function of
// (seed, key triple, counter), so initialization and sample generation are
// reproducible and independent of evaluation order or thread count.

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer: bijective 64-bit mix with full avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::uint64_t k0,
                              std::uint64_t k1, std::uint64_t k2) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ k0);
  h = mix64(h ^ k1);
  h = mix64(h ^ k2);
  return h;
}

}  // namespace detail

/// Key domains separating independent stream families under one master seed.
enum class StreamDomain : std::uint64_t {
  Weights = 0x57454947,
  Biases = 0x42494153,
  Mixers = 0x4D495845,
  Data = 0x44415441,
  Inputs = 0x494E5055,
  Probe = 0x50524F42,
};

/// A stream of doubles keyed by (seed, k0, k1, k2); draws advance a counter.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t k0 = 0, std::uint64_t k1 = 0,
            std::uint64_t k2 = 0)
      : key_(detail::hash_key(seed, k0, k1, k2)) {}

  RngStream(std::uint64_t seed, StreamDomain d, std::uint64_t k1 = 0,
            std::uint64_t k2 = 0)
      : RngStream(seed, static_cast<std::uint64_t>(d), k1, k2) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + counter_++ * detail::kGolden); }

  /// Uniform in (0, 1]: 53-bit mantissa, never exactly 0.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
  }

  /// Standard normal via Box-Muller; pairs are cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Fills any writable dense expression column by column.
  template <typename Derived>
  void fill_normal(const Eigen::MatrixBase<Derived>& expr) {
    auto& m = const_cast<Eigen::MatrixBase<Derived>&>(expr);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = next_normal();
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// One standard normal addressed by (seed, domain, a, b, c): used for
/// per-entry weight initialization keyed by (layer, row, column).
inline double normal_at(std::uint64_t seed, StreamDomain d, std::uint64_t a,
                        std::uint64_t b, std::uint64_t c) {
  RngStream s(seed, static_cast<std::uint64_t>(d) ^ detail::mix64(a), b, c);
  return s.next_normal();
}

}  // namespace ngrad
