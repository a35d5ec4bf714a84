#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlsf/errors.hpp"

namespace vlsf {

/// Capacity of the unit-noise AWGN channel at SNR `snr`, in nats per channel use:
/// C(P) = 1/2 ln(1+P).
inline double capacity(double snr) {
  if (!(snr > 0.0)) throw std::domain_error("capacity: snr must be > 0");
  return 0.5 * std::log1p(snr);
}

/// Dispersion V(P) = P(P+2) / (2(1+P)^2), in nats^2 per channel use.
/// Lies in (0, 1/2) for every P > 0.
inline double dispersion(double snr) {
  if (!(snr > 0.0)) throw std::domain_error("dispersion: snr must be > 0");
  return snr * (snr + 2.0) / (2.0 * (1.0 + snr) * (1.0 + snr));
}

/// Uniform bound J(P) = 27 sqrt(pi/8) (1+P)/sqrt(1+2P) on the ratio between the
/// spherical-input output density and the i.i.d. N(0, 1+P) proxy density.
inline double j_constant(double snr) {
  if (!(snr > 0.0)) throw std::domain_error("j_constant: snr must be > 0");
  return 27.0 * std::sqrt(std::numbers::pi / 8.0) * (1.0 + snr) / std::sqrt(1.0 + 2.0 * snr);
}

inline double log_j_constant(double snr) { return std::log(j_constant(snr)); }

/// k-fold nested logarithm. Defined when every intermediate value stays positive;
/// throws std::domain_error otherwise.
inline double nested_log(int k, double x) {
  if (k < 1) throw std::domain_error("nested_log: k must be >= 1");
  double v = x;
  for (int i = 0; i < k; ++i) {
    if (!(v > 0.0)) {
      throw std::domain_error("nested_log: ln_(" + std::to_string(i) + ")(x) = " +
                              std::to_string(v) + " is not > 0, ln_(" + std::to_string(k) +
                              ") undefined");
    }
    v = std::log(v);
  }
  return v;
}

/// Smallest x with ln_(k)(x) > 0, i.e. exp iterated k times on 0 (1, e, e^e, ...).
inline double nested_log_positive_edge(int k) {
  double v = 0.0;
  for (int i = 0; i < k; ++i) v = std::exp(v);
  return v;
}

inline bool nested_log_defined(int k, double x) noexcept {
  if (k < 1 || !(x > 0.0)) return false;
  double v = x;
  for (int i = 0; i < k; ++i) {
    if (!(v > 0.0)) return false;
    v = std::log(v);
  }
  return true;
}

/// Binary entropy in nats; endpoints return 0 by continuity.
inline double binary_entropy(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::domain_error("binary_entropy: eps outside [0,1]");
  if (eps == 0.0 || eps == 1.0) return 0.0;
  return -eps * std::log(eps) - (1.0 - eps) * std::log1p(-eps);
}

inline double gaussian_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Complementary Gaussian CDF Q(x).
inline double gaussian_q(double x) { return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0); }

namespace detail {

/// Acklam's rational approximation to the standard normal quantile, |error| < 1.15e-9.
inline double probit_approx(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) return -probit_approx(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Functional inverse of Q: returns x with Q(x) = p. Newton-polished to ~1e-14.
inline double gaussian_q_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("gaussian_q_inv: p outside (0,1)");
  double x = -detail::probit_approx(p);
  for (int it = 0; it < 4; ++it) {
    const double pdf = gaussian_pdf(x);
    if (pdf <= 0.0) break;
    const double step = (gaussian_q(x) - p) / pdf;
    x += step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

/// Per-symbol information density against the i.i.d. N(0, 1+P) proxy output law:
/// ln[ N(y; x, 1) / N(y; 0, 1+P) ] = 1/2 ln(1+P) - (y-x)^2/2 + y^2/(2(1+P)).
inline double info_density_increment(double x, double y, double snr) {
  if (!(snr > 0.0)) throw std::domain_error("info_density_increment: snr must be > 0");
  const double diff = y - x;
  return 0.5 * std::log1p(snr) - 0.5 * diff * diff + y * y / (2.0 * (1.0 + snr));
}

/// First three central moments of the per-symbol increment A_1 for an on-sphere input:
/// A = C(P) + c (1 - Z^2 + d Z) with c = P/(2(1+P)), d = 2/sqrt(P), Z ~ N(0,1).
struct MomentSet {
  double mean = 0.0;      ///< E[A_1] = C(P)
  double variance = 0.0;  ///< Var[A_1] = V(P)
  double mu3 = 0.0;       ///< E[(A_1 - C(P))^3]
};

namespace detail {

/// Nodes/weights of n-point Gauss-Hermite quadrature (weight e^{-t^2}),
/// via Newton iteration on the Hermite recurrence.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussHermite(int n) {
    nodes.resize(n);
    weights.resize(n);
    const int m = (n + 1) / 2;
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
      if (i == 0) {
        z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
      } else if (i == 1) {
        z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
      } else if (i == 2) {
        z = 1.86 * z - 0.86 * nodes[0];
      } else if (i == 3) {
        z = 1.91 * z - 0.91 * nodes[1];
      } else {
        z = 2.0 * z - nodes[i - 2];
      }
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = pim4;
        double p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        const double dz = p1 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15 * (1.0 + std::abs(z))) break;
      }
      nodes[i] = z;
      nodes[n - 1 - i] = -z;
      weights[i] = 2.0 / (pp * pp);
      weights[n - 1 - i] = weights[i];
    }
  }

  /// E[f(Z)] for Z ~ N(0,1).
  template <typename Fn>
  double gaussian_expectation(Fn f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      acc += weights[i] * f(std::numbers::sqrt2 * nodes[i]);
    }
    return acc / std::sqrt(std::numbers::pi);
  }
};

inline const GaussHermite& gauss_hermite_64() {
  static const GaussHermite gh(64);
  return gh;
}

}  // namespace detail

/// Moments of the i.i.d. decomposition A_i. Mean and variance are the closed forms
/// C(P), V(P); mu3 integrates the degree-6 polynomial in Z by 64-point Gauss-Hermite
/// quadrature (exact for this degree).
inline MomentSet increment_moments(double snr) {
  if (!(snr > 0.0)) throw std::domain_error("increment_moments: snr must be > 0");
  const double c = snr / (2.0 * (1.0 + snr));
  const double d = 2.0 / std::sqrt(snr);
  MomentSet m;
  m.mean = capacity(snr);
  m.variance = dispersion(snr);
  m.mu3 = detail::gauss_hermite_64().gaussian_expectation([&](double z) {
    const double u = c * (1.0 - z * z + d * z);
    return u * u * u;
  });
  return m;
}

/// SNR together with the derived channel constants.
struct ChannelParams {
  double snr = 0.0;
  double capacity = 0.0;
  double dispersion = 0.0;
  double j_constant = 0.0;
  double log_j = 0.0;

  static ChannelParams from_snr(double snr) {
    ChannelParams p;
    p.snr = snr;
    p.capacity = vlsf::capacity(snr);
    p.dispersion = vlsf::dispersion(snr);
    p.j_constant = vlsf::j_constant(snr);
    p.log_j = std::log(p.j_constant);
    return p;
  }
};

}  // namespace vlsf
