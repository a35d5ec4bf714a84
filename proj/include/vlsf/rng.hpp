#pragma once

#include <cmath>
#include <cstdint>

namespace vlsf {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace detail

/// Stream identifiers so independent consumers of the same seed never collide.
namespace stream_tag {
inline constexpr std::uint64_t kCodebook = 0x01;
inline constexpr std::uint64_t kNoise = 0x02;
inline constexpr std::uint64_t kTrial = 0x03;
inline constexpr std::uint64_t kTail = 0x04;
inline constexpr std::uint64_t kRenewal = 0x05;
inline constexpr std::uint64_t kMartingale = 0x06;
inline constexpr std::uint64_t kMoments = 0x07;
inline constexpr std::uint64_t kSphere = 0x08;
}  // namespace stream_tag

/// Derives a decorrelated stream key from (seed, tag, index). Every trial /
/// codeword / block owns its own key, so parallel execution order cannot
/// change which random numbers a given trial sees.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0,
                                std::uint64_t subindex = 0) {
  std::uint64_t h = detail::mix64(seed + detail::kGolden);
  h = detail::mix64(h ^ (tag * 0xff51afd7ed558ccdull));
  h = detail::mix64(h + index * detail::kGolden);
  h = detail::mix64(h ^ (subindex + 0xc4ceb9fe1a85ec53ull));
  return h;
}

/// Counter-based splitmix64 stream with Gaussian / gamma samplers.
/// Deterministic given its key; cheap to construct per trial.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += detail::kGolden);
    return detail::mix64(z);
  }

  /// Uniform on (0,1), never exactly 0 or 1.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53 + 0x1p-54; }

  /// Uniform integer in [0, n). n must be >= 1.
  std::int64_t uniform_index(std::int64_t n) {
    auto idx = static_cast<std::int64_t>(uniform() * static_cast<double>(n));
    return idx >= n ? n - 1 : idx;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via the Marsaglia polar method (pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Gamma(shape, 1) via Marsaglia–Tsang; shape < 1 handled by boosting.
  double gamma(double shape) {
    if (shape <= 0.0) return 0.0;
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double dof) { return dof <= 0.0 ? 0.0 : 2.0 * gamma(0.5 * dof); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vlsf
