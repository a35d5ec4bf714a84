#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "vlsf/channel.hpp"
#include "vlsf/rng.hpp"

namespace vlsf {

/// Joint draw of (sum of per-symbol information-density increments, ||y||^2)
/// over one sub-codeword segment of `len` channel uses.
struct InfoBlockDraw {
  double a_sum = 0.0;
  double y_norm_sq = 0.0;
};

/// Samples an InfoBlockDraw from its exact law. Conditioned on an on-sphere
/// sub-codeword, both quantities depend on the noise only through the
/// sufficient statistic (sum Z_i, sum Z_i^2), with sum Z_i ~ N(0, len) and
/// sum Z_i^2 = chi^2_{len-1} + (sum Z_i)^2 / len. This makes tail estimation
/// O(1) per block instead of O(len).
inline InfoBlockDraw draw_info_block(std::int64_t len, double snr, RandomStream& rng) {
  if (len < 0) throw std::domain_error("draw_info_block: negative length");
  if (len == 0) return {};
  const double cap = capacity(snr);
  const double c = snr / (2.0 * (1.0 + snr));
  const double d = 2.0 / std::sqrt(snr);
  const double s = rng.normal() * std::sqrt(static_cast<double>(len));
  const double q = (len > 1 ? rng.chi_square(static_cast<double>(len - 1)) : 0.0) +
                   s * s / static_cast<double>(len);
  InfoBlockDraw out;
  out.a_sum = static_cast<double>(len) * cap + c * (static_cast<double>(len) - q + d * s);
  const double y2 = static_cast<double>(len) * snr + 2.0 * std::sqrt(snr) * s + q;
  out.y_norm_sq = y2 > 0.0 ? y2 : 0.0;
  return out;
}

/// Cosine of the angle between a uniform point on the sphere in `dim` dimensions
/// and a fixed direction. For dim = 1 this is +-1 with equal probability.
inline double draw_sphere_cosine(std::int64_t dim, RandomStream& rng) {
  if (dim < 1) throw std::domain_error("draw_sphere_cosine: dim must be >= 1");
  if (dim == 1) return rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double z = rng.normal();
  const double rest = rng.chi_square(static_cast<double>(dim - 1));
  return z / std::sqrt(z * z + rest);
}

}  // namespace vlsf
