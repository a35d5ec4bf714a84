#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vlsf/channel.hpp"
#include "vlsf/codebook.hpp"
#include "vlsf/errors.hpp"
#include "vlsf/parallel.hpp"
#include "vlsf/rng.hpp"
#include "vlsf/sampling.hpp"

namespace vlsf {

struct McEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::int64_t trials = 0;
};

/// Monte Carlo estimate of P[sum_{i=1}^n A_i < threshold] with binomial standard error.
/// Each trial samples the block sum from its exact law (see draw_info_block).
inline McEstimate tail_prob_mc(std::int64_t n, double threshold, double snr,
                               std::int64_t trials, std::uint64_t seed,
                               unsigned threads = 0) {
  if (n < 1) throw ValidationError("tail_prob_mc: n must be >= 1");
  if (trials < 1) throw ValidationError("tail_prob_mc: trials must be >= 1");
  const std::int64_t hits = chunked_reduce<std::int64_t>(
      trials, kDefaultChunk, threads,
      [&](std::int64_t b, std::int64_t e) {
        std::int64_t h = 0;
        for (std::int64_t t = b; t < e; ++t) {
          RandomStream rng(stream_key(seed, stream_tag::kTail, static_cast<std::uint64_t>(t)));
          if (draw_info_block(n, snr, rng).a_sum < threshold) ++h;
        }
        return h;
      },
      [](std::int64_t a, std::int64_t b) { return a + b; }, std::int64_t{0});
  McEstimate est;
  est.trials = trials;
  est.value = static_cast<double>(hits) / static_cast<double>(trials);
  est.stderr_ = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(trials));
  return est;
}

/// Leading term of Petrov's moderate-deviations expansion for an i.i.d. sum with the
/// given moments: P[sum (X_i - mean) >= z sigma sqrt(n)] ~ Q(z) exp(z^3 mu3 / (6 sqrt(n) sigma^3)).
/// The O(n^{-1/2} e^{-z^2/2}) remainder is deliberately excluded.
inline double petrov_tail(std::int64_t n, double z, const MomentSet& moments) {
  if (!(z >= 0.0)) throw std::domain_error("petrov_tail: z must be >= 0");
  if (n < 1) throw ValidationError("petrov_tail: n must be >= 1");
  const double sigma3 = std::pow(moments.variance, 1.5);
  return gaussian_q(z) *
         std::exp(z * z * z * moments.mu3 / (6.0 * std::sqrt(static_cast<double>(n)) * sigma3));
}

/// True when z is inside the moderate-deviations regime the expansion assumes.
inline bool petrov_regime_ok(std::int64_t n, double z) {
  return z <= 2.0 * std::pow(static_cast<double>(n), 1.0 / 6.0);
}

enum class TailMode { kJoint, kMarginal };

/// Monte Carlo evaluation of the non-asymptotic achievability bound for a fixed
/// threshold gamma and schedule: the error-probability bound
///   eps <= P[i(X^{n_K};Y^{n_K}) < gamma] + (M-1) e^{-gamma}
/// (the power-violation term is exactly 0 for the spherical codebook) and the
/// average-decoding-time bound
///   N <= n_1 + sum_i (n_{i+1}-n_i) P[inter_{j<=i} {i(X^{n_j};Y^{n_j}) < gamma}].
/// All information-density tails go through the A-sum proxy with slack
/// k ln J(P) added to gamma (the conservative direction); the raw no-slack
/// tails are reported alongside.
struct BoundReport {
  std::vector<double> marginal_tail;    ///< slacked, one per decoding time
  std::vector<double> marginal_stderr;
  std::vector<double> raw_tail;         ///< same events without the J-slack
  std::vector<double> joint_tail;       ///< K-1 intersection probabilities (slacked)
  std::vector<double> joint_stderr;
  double eps_upper = 0.0;
  double union_term = 0.0;      ///< (m-1) e^{-gamma}
  double union_term_log = 0.0;  ///< ln(m-1) - gamma, finite even when union_term overflows
  double n_upper = 0.0;
  double n_upper_stderr = 0.0;
  TailMode mode = TailMode::kJoint;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double snr = 0.0;
  std::int64_t m = 0;
  std::vector<std::int64_t> times;
  std::vector<int> slack_counts;
};

namespace detail {

struct ThresholdBoundAcc {
  std::vector<std::int64_t> marg;
  std::vector<std::int64_t> raw;
  std::vector<std::int64_t> joint;
  double sum_t_joint = 0.0;
  double sum_t2_joint = 0.0;
  double sum_t_marg = 0.0;
  double sum_t2_marg = 0.0;
  bool init = false;
};

}  // namespace detail

inline BoundReport evaluate_threshold_bound(const Schedule& schedule, double gamma, std::int64_t m,
                                 double snr, std::int64_t trials, std::uint64_t seed,
                                 TailMode mode = TailMode::kJoint, unsigned threads = 0) {
  schedule.validate();
  if (!std::isfinite(gamma)) throw ValidationError("evaluate_threshold_bound: gamma must be finite");
  if (m < 1) throw ValidationError("evaluate_threshold_bound: m must be >= 1");
  if (trials < 1) throw ValidationError("evaluate_threshold_bound: trials must be >= 1");
  if (!(snr > 0.0)) throw ValidationError("evaluate_threshold_bound: snr must be > 0");

  const int k = schedule.k();
  const double log_j = log_j_constant(snr);
  std::vector<int> slack(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) slack[static_cast<std::size_t>(i)] = schedule.slack_count(i);

  auto map_chunk = [&](std::int64_t b, std::int64_t e) {
    detail::ThresholdBoundAcc acc;
    acc.marg.assign(static_cast<std::size_t>(k), 0);
    acc.raw.assign(static_cast<std::size_t>(k), 0);
    acc.joint.assign(static_cast<std::size_t>(k > 1 ? k - 1 : 0), 0);
    acc.init = true;
    for (std::int64_t t = b; t < e; ++t) {
      RandomStream rng(stream_key(seed, stream_tag::kTail, static_cast<std::uint64_t>(t)));
      double sum = 0.0;
      bool all_below = true;
      double t_joint = static_cast<double>(schedule.times[0]);
      double t_marg = static_cast<double>(schedule.times[0]);
      for (int i = 0; i < k; ++i) {
        sum += draw_info_block(schedule.segment_length(i), snr, rng).a_sum;
        const bool below_slack =
            sum < gamma + slack[static_cast<std::size_t>(i)] * log_j;
        const bool below_raw = sum < gamma;
        if (below_slack) ++acc.marg[static_cast<std::size_t>(i)];
        if (below_raw) ++acc.raw[static_cast<std::size_t>(i)];
        all_below = all_below && below_slack;
        if (i < k - 1) {
          if (all_below) ++acc.joint[static_cast<std::size_t>(i)];
          const double gap = static_cast<double>(schedule.times[static_cast<std::size_t>(i) + 1] -
                                                 schedule.times[static_cast<std::size_t>(i)]);
          if (all_below) t_joint += gap;
          if (below_slack) t_marg += gap;
        }
      }
      acc.sum_t_joint += t_joint;
      acc.sum_t2_joint += t_joint * t_joint;
      acc.sum_t_marg += t_marg;
      acc.sum_t2_marg += t_marg * t_marg;
    }
    return acc;
  };
  auto fold = [&](detail::ThresholdBoundAcc a, const detail::ThresholdBoundAcc& p) {
    if (!a.init) return p;
    for (std::size_t i = 0; i < a.marg.size(); ++i) a.marg[i] += p.marg[i];
    for (std::size_t i = 0; i < a.raw.size(); ++i) a.raw[i] += p.raw[i];
    for (std::size_t i = 0; i < a.joint.size(); ++i) a.joint[i] += p.joint[i];
    a.sum_t_joint += p.sum_t_joint;
    a.sum_t2_joint += p.sum_t2_joint;
    a.sum_t_marg += p.sum_t_marg;
    a.sum_t2_marg += p.sum_t2_marg;
    return a;
  };
  const auto acc =
      chunked_reduce<detail::ThresholdBoundAcc>(trials, kDefaultChunk, threads, map_chunk, fold, {});

  const auto trials_d = static_cast<double>(trials);
  BoundReport r;
  r.mode = mode;
  r.trials = trials;
  r.seed = seed;
  r.gamma = gamma;
  r.snr = snr;
  r.m = m;
  r.times = schedule.times;
  r.slack_counts = slack;
  auto rate = [&](std::int64_t c) { return static_cast<double>(c) / trials_d; };
  auto berr = [&](double p) { return std::sqrt(p * (1.0 - p) / trials_d); };
  for (int i = 0; i < k; ++i) {
    const double p = rate(acc.marg[static_cast<std::size_t>(i)]);
    r.marginal_tail.push_back(p);
    r.marginal_stderr.push_back(berr(p));
    r.raw_tail.push_back(rate(acc.raw[static_cast<std::size_t>(i)]));
  }
  for (int i = 0; i + 1 < k; ++i) {
    const double p = rate(acc.joint[static_cast<std::size_t>(i)]);
    r.joint_tail.push_back(p);
    r.joint_stderr.push_back(berr(p));
  }

  r.union_term_log = m > 1 ? std::log(static_cast<double>(m - 1)) - gamma
                           : -std::numeric_limits<double>::infinity();
  r.union_term = m > 1 ? std::exp(r.union_term_log) : 0.0;
  r.eps_upper = r.marginal_tail.back() + r.union_term;

  const double sum_t = mode == TailMode::kJoint ? acc.sum_t_joint : acc.sum_t_marg;
  const double sum_t2 = mode == TailMode::kJoint ? acc.sum_t2_joint : acc.sum_t2_marg;
  r.n_upper = sum_t / trials_d;
  const double var = std::max(0.0, sum_t2 / trials_d - r.n_upper * r.n_upper);
  r.n_upper_stderr = std::sqrt(var / trials_d);
  return r;
}

enum class Regime {
  kK1MaxPower,      ///< fixed length, maximal power
  kK1AvgPower,      ///< fixed length, average power
  kFiniteK,         ///< K >= 2 decoding times, the nested-log expansion
  kKinfMaxPower,    ///< unbounded decoding times, maximal power
  kKinfAvgPowerAch, ///< unbounded decoding times, average power achievability
  kConverse,        ///< average-power converse
};

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::kK1MaxPower: return "k1_maxpower";
    case Regime::kK1AvgPower: return "k1_avgpower";
    case Regime::kFiniteK: return "finiteK";
    case Regime::kKinfMaxPower: return "kinf_maxpower";
    case Regime::kKinfAvgPowerAch: return "kinf_avgpower_ach";
    case Regime::kConverse: return "converse";
  }
  return "unknown";
}

/// Zero-decode randomization bookkeeping shared by the asymptotic-point records
/// and the code designer. eps_prime is 1/sqrt(N' ln N') for finite K and 1/N'
/// for K = infinity; p and N' solve the fixed point N' = N (1-eps')/(1-eps).
struct ZeroDecodeSplit {
  double p = 0.0;
  double n_prime = 0.0;
  double eps_prime = 0.0;
  bool degenerate = false;  ///< eps < eps_prime at this scale; p clamped to 0
};

inline ZeroDecodeSplit zero_decode_split(double n, double eps, bool k_infinite) {
  if (!(n > 1.0)) throw ValidationError("zero_decode_split: need n > 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("zero_decode_split: eps outside (0,1)");
  ZeroDecodeSplit s;
  double n_prime = n / (1.0 - eps);
  for (int it = 0; it < 200; ++it) {
    const double eps_prime =
        k_infinite ? 1.0 / n_prime : 1.0 / std::sqrt(n_prime * std::log(n_prime));
    if (eps <= eps_prime) {
      s.p = 0.0;
      s.n_prime = n;
      s.eps_prime = k_infinite ? 1.0 / n : 1.0 / std::sqrt(n * std::log(n));
      s.degenerate = true;
      return s;
    }
    const double p = (eps - eps_prime) / (1.0 - eps_prime);
    const double next = n / (1.0 - p);
    if (std::abs(next - n_prime) < 1e-12 * n_prime) {
      s.p = p;
      s.n_prime = next;
      s.eps_prime = eps_prime;
      return s;
    }
    n_prime = next;
  }
  throw NonConvergenceError("zero_decode_split: fixed point did not converge", n_prime, 0.0, 200);
}

/// One evaluated point of an asymptotic rate formula. `dropped_terms` records
/// which order terms of the expansion were ignored.
struct AsymptoticPoint {
  Regime regime = Regime::kFiniteK;
  int k = 0;  ///< decoding times; 0 encodes K = infinity, 1 fixed-length
  double n = 0.0;
  double eps = 0.0;
  double p = 0.0;  ///< zero-decode probability used by the construction (when applicable)
  double rate = 0.0;
  double ln_m = 0.0;
  std::vector<std::string> dropped_terms;
};

/// Converse on the rate of average-power VLSF codes: (N C/(1-eps) + h_b(eps)/(1-eps)) / N.
inline double converse_rate(double n, double eps, double snr) {
  if (!(n > 0.0)) throw std::domain_error("converse_rate: n must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("converse_rate: eps outside (0,1)");
  const double c = capacity(snr);
  return (n * c / (1.0 - eps) + binary_entropy(eps) / (1.0 - eps)) / n;
}

struct AsymptoticSpec {
  Regime regime = Regime::kFiniteK;
  int k = 2;
  double n = 0.0;
  double eps = 0.0;
  double snr = 1.0;
};

inline AsymptoticPoint asymptotic_rate(const AsymptoticSpec& spec) {
  if (!(spec.n > 0.0)) throw std::domain_error("asymptotic_rate: n must be > 0");
  if (!(spec.eps > 0.0 && spec.eps < 1.0)) {
    throw std::domain_error("asymptotic_rate: eps outside (0,1)");
  }
  const double n = spec.n;
  const double eps = spec.eps;
  const double c = capacity(spec.snr);
  const double v = dispersion(spec.snr);
  AsymptoticPoint pt;
  pt.regime = spec.regime;
  pt.k = spec.k;
  pt.n = n;
  pt.eps = eps;
  switch (spec.regime) {
    case Regime::kK1MaxPower: {
      pt.k = 1;
      pt.ln_m = n * c - std::sqrt(n * v) * gaussian_q_inv(eps) + 0.5 * std::log(n);
      pt.dropped_terms = {"O(1)"};
      break;
    }
    case Regime::kK1AvgPower: {
      pt.k = 1;
      const double boosted = spec.snr / (1.0 - eps);
      pt.ln_m = n * capacity(boosted) - std::sqrt(n * std::log(n) * dispersion(boosted));
      pt.dropped_terms = {"O(sqrt(N))"};
      break;
    }
    case Regime::kFiniteK: {
      if (spec.k < 2) throw ValidationError("asymptotic_rate: finiteK requires k >= 2");
      const double nl = nested_log(spec.k - 1, n);  // throws when undefined
      if (!(nl >= 0.0)) {
        throw std::domain_error("asymptotic_rate: ln_(" + std::to_string(spec.k - 1) + ")(" +
                                std::to_string(n) + ") < 0; second-order term undefined");
      }
      pt.ln_m = n * c / (1.0 - eps) - std::sqrt(n * nl * v / (1.0 - eps));
      pt.dropped_terms = {"O(sqrt(N/ln_(" + std::to_string(spec.k - 1) + ")(N)))"};
      pt.p = zero_decode_split(n, eps, false).p;
      break;
    }
    case Regime::kKinfMaxPower: {
      pt.k = 0;
      pt.ln_m = n * c / (1.0 - eps) -
                std::sqrt(n * 4.0 * c * log_j_constant(spec.snr) / (1.0 - eps)) - std::log(n);
      pt.dropped_terms = {"O(1)"};
      pt.p = zero_decode_split(n, eps, true).p;
      break;
    }
    case Regime::kKinfAvgPowerAch: {
      pt.k = 0;
      pt.ln_m = n * c / (1.0 - eps) - std::log(n);
      pt.dropped_terms = {"O(1)"};
      break;
    }
    case Regime::kConverse: {
      pt.k = 0;
      pt.ln_m = n * c / (1.0 - eps) + binary_entropy(eps) / (1.0 - eps);
      break;
    }
  }
  pt.rate = pt.ln_m / n;
  return pt;
}

}  // namespace vlsf
