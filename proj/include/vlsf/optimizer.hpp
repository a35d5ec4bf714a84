#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "vlsf/bounds.hpp"
#include "vlsf/channel.hpp"
#include "vlsf/codebook.hpp"
#include "vlsf/errors.hpp"

namespace vlsf {

/// Damped Newton iteration on a scalar equation. `f` returns (value, derivative).
/// Steps are halved (up to 30 times) while the residual fails to decrease.
/// Throws NonConvergenceError with the last iterate when max_iter is exhausted
/// or the derivative vanishes.
inline double newton_root(const std::function<std::pair<double, double>(double)>& f, double x0,
                          double tol, int max_iter) {
  if (!(tol > 0.0)) throw ValidationError("newton_root: tol must be > 0");
  double x = x0;
  auto [fx, dfx] = f(x);
  if (!std::isfinite(fx)) {
    throw NonConvergenceError("newton_root: residual not finite at the starting point", x, fx, 0);
  }
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fx) < tol) return x;
    if (dfx == 0.0 || !std::isfinite(dfx)) {
      throw NonConvergenceError("newton_root: derivative vanished", x, fx, it);
    }
    double step = -fx / dfx;
    double x_next = x + step;
    auto [fn, dfn] = f(x_next);
    int halvings = 0;
    while ((!std::isfinite(fn) || std::abs(fn) >= std::abs(fx)) && halvings < 30) {
      step *= 0.5;
      x_next = x + step;
      std::tie(fn, dfn) = f(x_next);
      ++halvings;
    }
    if (!std::isfinite(fn)) {
      throw NonConvergenceError("newton_root: residual not finite", x_next, fx, it);
    }
    x = x_next;
    fx = fn;
    dfx = dfn;
  }
  if (std::abs(fx) < tol) return x;
  throw NonConvergenceError("newton_root: max iterations exceeded", x, fx, max_iter);
}

namespace detail {

inline double nested_log_derivative(int depth, double n) {
  // d/dn ln_(depth)(n) = 1 / (n * prod_{j<depth} ln_(j)(n))
  double denom = n;
  double v = n;
  for (int j = 1; j < depth; ++j) {
    v = std::log(v);
    denom *= v;
  }
  return 1.0 / denom;
}

}  // namespace detail

/// Root n of the threshold-crossing equation
///   n cap - sqrt(n * ln_(depth)(n) * disp) = rhs
/// on the branch above rhs/cap. `cap`/`disp` are explicit so degenerate test
/// channels can be injected. Residual at return is below 1e-9 * max(1, |rhs|).
inline double solve_time_equation(int depth, double rhs, double cap, double disp) {
  if (depth < 1) throw ValidationError("solve_time_equation: depth must be >= 1");
  if (!(cap > 0.0) || disp < 0.0) {
    throw ValidationError("solve_time_equation: need cap > 0 and disp >= 0");
  }
  const double tol = 1e-9 * std::max(1.0, std::abs(rhs));
  const double n0 = rhs / cap;
  if (disp == 0.0) return n0;
  const double edge = nested_log_positive_edge(depth);
  if (!(n0 > edge * (1.0 + 1e-12))) {
    throw InfeasibleError("solve_time_equation: gamma too small, rhs/C = " + std::to_string(n0) +
                          " is not above the ln_(" + std::to_string(depth) + ") domain edge " +
                          std::to_string(edge));
  }
  auto h = [&](double n) {
    return n * cap - std::sqrt(n * nested_log(depth, n) * disp) - rhs;
  };
  auto h_prime = [&](double n) {
    const double nl = nested_log(depth, n);
    const double root = std::sqrt(n * nl * disp);
    if (root == 0.0) return cap;
    return cap - disp * (nl + n * detail::nested_log_derivative(depth, n)) / (2.0 * root);
  };
  // h(n0) = -sqrt(...) < 0; expand upward until the bracket closes.
  double lo = n0;
  double hi = n0;
  double h_hi = h(hi);
  for (int it = 0; it < 200 && h_hi < 0.0; ++it) {
    lo = hi;
    hi *= 2.0;
    h_hi = h(hi);
  }
  if (h_hi < 0.0) {
    throw InfeasibleError("solve_time_equation: no upper bracket found");
  }
  // Safeguarded Newton inside [lo, hi].
  double x = std::min(hi, std::max(lo, n0 + std::sqrt(n0 * nested_log(depth, n0) * disp) / cap));
  double hx = h(x);
  for (int it = 0; it < 200; ++it) {
    if (std::abs(hx) < tol) return x;
    if (hx < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double d = h_prime(x);
    double x_next = d != 0.0 ? x - hx / d : 0.5 * (lo + hi);
    if (!(x_next > lo && x_next < hi)) x_next = 0.5 * (lo + hi);
    x = x_next;
    hx = h(x);
  }
  if (std::abs(hx) < tol) return x;
  throw NonConvergenceError("solve_time_equation: did not converge", x, hx, 200);
}

struct ScheduleSolution {
  Schedule schedule;                 ///< integer decoding times (strictly increasing)
  std::vector<double> real_times;    ///< unrounded solver output, one per original k
  std::vector<double> residuals;     ///< defining-equation residuals at the real times
  int merged = 0;                    ///< times merged after rounding
};

/// Solves the schedule equations: for each k in [K],
///   gamma + K ln J(P) = n_k C(P) - sqrt(n_k * ln_(K-k+1)(n_k) * V(P)).
/// Real-valued roots are rounded at the end (nearest for interior times,
/// ceiling for n_K). A degenerate analytic tie raises InfeasibleError;
/// a tie created by rounding is merged with `merged` incremented.
inline ScheduleSolution solve_decoding_times(int k, double gamma, double snr) {
  if (k < 1) throw ValidationError("solve_decoding_times: k must be >= 1");
  const auto ch = ChannelParams::from_snr(snr);
  const double rhs = gamma + k * ch.log_j;
  ScheduleSolution out;
  for (int kk = 1; kk <= k; ++kk) {
    const int depth = k - kk + 1;
    const double t = solve_time_equation(depth, rhs, ch.capacity, ch.dispersion);
    if (!out.real_times.empty() && !(t > out.real_times.back() * (1.0 + 1e-12))) {
      throw InfeasibleError("solve_decoding_times: degenerate schedule, times " +
                            std::to_string(out.real_times.back()) + " and " + std::to_string(t) +
                            " coincide");
    }
    out.real_times.push_back(t);
    out.residuals.push_back(t * ch.capacity -
                            std::sqrt(t * nested_log(depth, t) * ch.dispersion) - rhs);
  }
  std::vector<std::int64_t> times;
  for (int i = 0; i < k; ++i) {
    const double t = out.real_times[static_cast<std::size_t>(i)];
    // ceiling for the last time keeps the error budget; the 1e-9 slack stops
    // floating-point noise from bumping an exact-integer root.
    const std::int64_t rounded =
        i == k - 1 ? static_cast<std::int64_t>(std::ceil(t - 1e-9)) : std::llround(t);
    if (!times.empty() && rounded <= times.back()) {
      ++out.merged;  // rounding tie: keep the earlier time, drop this one
      continue;
    }
    times.push_back(rounded);
  }
  out.schedule = Schedule::of(std::move(times));
  return out;
}

/// Model of the average-decoding-time bound used during design: the marginal
/// tails are approximated by Q(g(n_i)) with the slacked threshold, which at a
/// schedule satisfying the defining equations equals Q(sqrt(ln_(K-i+1)(n_i))).
inline double predicted_avg_time(const std::vector<double>& times, double gamma, double snr) {
  if (times.empty()) throw ValidationError("predicted_avg_time: empty schedule");
  const auto ch = ChannelParams::from_snr(snr);
  const int k = static_cast<int>(times.size());
  const double gamma_eff = gamma + k * ch.log_j;
  double n_hat = times[0];
  for (int i = 0; i + 1 < k; ++i) {
    const double t = times[static_cast<std::size_t>(i)];
    const double g = (t * ch.capacity - gamma_eff) / std::sqrt(t * ch.dispersion);
    n_hat += (times[static_cast<std::size_t>(i) + 1] - t) * gaussian_q(g);
  }
  return n_hat;
}

/// Full parameter set of a designed VLSF code.
struct CodeDesign {
  Schedule schedule;           ///< finite K: decoding times (leading 0 when lifted)
  double gamma = 0.0;          ///< decoding threshold (nats)
  double ln_m = 0.0;           ///< designed message size, ln M = gamma - ln N'
  std::int64_t m = 0;          ///< integer M; -1 when exp(ln_m) exceeds int64
  double p_zero = 0.0;         ///< Bernoulli decode-at-time-zero probability
  double eps_prime = 0.0;      ///< inner-code error budget eps'_N
  double n_target = 0.0;       ///< requested average decoding time N
  double n_prime = 0.0;        ///< inner-code average decoding time N'
  double eps_target = 0.0;     ///< requested average error probability
  double snr = 0.0;
  std::int64_t grid_spacing = 0;  ///< K = infinity designs: uniform gap; 0 otherwise

  double predicted_ln_m = 0.0;  ///< asymptotic expansion value at (n_target, eps)
  double predicted_rate = 0.0;
  double rate_ratio = 0.0;  ///< predicted_rate / (C/(1-eps))
  std::vector<std::string> dropped_terms;

  bool lift_degenerate = false;    ///< eps <= eps'_N at this scale; p_zero forced to 0
  bool p_zero_range_warning = false;  ///< p_zero > 0.999
  bool m_capped = false;           ///< gamma re-solved for an externally capped M
  int gamma_iterations = 0;
  double gamma_residual = 0.0;
  std::vector<double> schedule_residuals;
  std::vector<double> real_times;
};

struct DesignOptions {
  bool strict_feasibility = false;  ///< error out when eps < eps'_N instead of degrading
  double avg_time_tolerance = 1e-9; ///< relative tolerance on the N'(gamma) solve
};

namespace detail {

inline std::int64_t message_count_from_ln(double ln_m) {
  if (ln_m > 42.0) return -1;  // exp(42) > int64 range
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(std::exp(ln_m))));
}

}  // namespace detail

/// Code design for a target (N, K, eps, P):
///  1. split off the Bernoulli(p) decode-at-zero mass, giving the inner target
///     N' and error budget eps'_N = 1/sqrt(N' ln N');
///  2. solve the K-1 inner decoding times and gamma so the modeled average
///     decoding time of the inner code equals N';
///  3. set ln M = gamma - ln N' and prepend the time-0 slot.
inline CodeDesign design_vlsf_code(double n_target, int k, double eps, double snr,
                                   const DesignOptions& opts = {}) {
  if (k < 2) throw ValidationError("design_vlsf_code: k must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("design_vlsf_code: eps outside (0,1)");
  if (!(n_target > 1.0)) throw ValidationError("design_vlsf_code: n_target must be > 1");
  if (!(snr > 0.0)) throw ValidationError("design_vlsf_code: snr must be > 0");

  const auto split = zero_decode_split(n_target, eps, /*k_infinite=*/false);
  if (split.degenerate && opts.strict_feasibility) {
    throw InfeasibleError("design_vlsf_code: eps = " + std::to_string(eps) +
                          " is below the construction's eps'_N = " +
                          std::to_string(split.eps_prime) + " at N = " +
                          std::to_string(n_target));
  }

  const int k_inner = k - 1;
  const auto ch = ChannelParams::from_snr(snr);
  const double n_prime = split.n_prime;
  if (!nested_log_defined(k_inner, n_prime) ||
      !(nested_log(k_inner, n_prime) > 0.0)) {
    throw InfeasibleError("design_vlsf_code: N' = " + std::to_string(n_prime) +
                          " is inside the ln_(" + std::to_string(k_inner) + ") domain edge");
  }

  // gamma0 satisfies the k=1 inner equation at n = N'; the modeled average time
  // there overshoots N', so the root lies below gamma0. Bisection on the
  // monotone map gamma -> N'(gamma).
  const double gamma0 = n_prime * ch.capacity -
                        std::sqrt(n_prime * nested_log(k_inner, n_prime) * ch.dispersion) -
                        k_inner * ch.log_j;
  auto modeled_time = [&](double gamma) {
    return predicted_avg_time(solve_decoding_times(k_inner, gamma, snr).real_times, gamma, snr);
  };
  double hi = gamma0;
  double hi_val = modeled_time(hi);
  double lo = hi;
  double lo_val = hi_val;
  double step = std::max(1.0, (hi_val - n_prime) * ch.capacity);
  int iters = 0;
  while (lo_val > n_prime) {
    const double cand = lo - step;
    double cand_val;
    try {
      cand_val = modeled_time(cand);
    } catch (const InfeasibleError&) {
      step *= 0.5;
      if (step < 1e-9) {
        throw InfeasibleError("design_vlsf_code: no feasible gamma reaches N' = " +
                              std::to_string(n_prime));
      }
      continue;
    }
    hi = lo;
    hi_val = lo_val;
    lo = cand;
    lo_val = cand_val;
    step *= 2.0;
    if (++iters > 200) {
      throw NonConvergenceError("design_vlsf_code: gamma bracketing failed", lo, lo_val - n_prime,
                                iters);
    }
  }
  double gamma = hi;
  double resid = hi_val - n_prime;
  for (int it = 0; it < 200; ++it) {
    gamma = 0.5 * (lo + hi);
    const double val = modeled_time(gamma);
    resid = val - n_prime;
    if (std::abs(resid) <= opts.avg_time_tolerance * n_prime) break;
    if (val > n_prime) {
      hi = gamma;
    } else {
      lo = gamma;
    }
    iters = it;
  }

  auto inner = solve_decoding_times(k_inner, gamma, snr);

  CodeDesign d;
  d.gamma = gamma;
  d.ln_m = gamma - std::log(n_prime);
  d.m = detail::message_count_from_ln(d.ln_m);
  d.p_zero = split.p;
  d.eps_prime = split.eps_prime;
  d.n_target = n_target;
  d.n_prime = n_prime;
  d.eps_target = eps;
  d.snr = snr;
  d.lift_degenerate = split.degenerate;
  d.p_zero_range_warning = split.p > 0.999;
  d.gamma_iterations = iters;
  d.gamma_residual = resid;
  d.schedule_residuals = inner.residuals;
  d.real_times = inner.real_times;

  std::vector<std::int64_t> times{0};
  for (const auto t : inner.schedule.times) times.push_back(t);
  d.schedule = Schedule::of(std::move(times));

  const AsymptoticSpec spec{Regime::kFiniteK, k, n_target, eps, snr};
  const auto pt = asymptotic_rate(spec);
  d.predicted_ln_m = pt.ln_m;
  d.predicted_rate = pt.rate;
  d.rate_ratio = pt.rate / (ch.capacity / (1.0 - eps));
  d.dropped_terms = pt.dropped_terms;
  return d;
}

/// Replaces the designed (astronomical) message count with an explicit cap and
/// re-solves gamma from the message-size rule, gamma = ln M + ln N'. The
/// schedule is kept; used for desk-scale simulation experiments.
inline CodeDesign cap_message_count(const CodeDesign& design, std::int64_t m_cap) {
  if (m_cap < 1) throw ValidationError("cap_message_count: m_cap must be >= 1");
  CodeDesign d = design;
  d.m = m_cap;
  d.ln_m = std::log(static_cast<double>(m_cap));
  d.gamma = d.ln_m + std::log(d.n_prime);
  d.m_capped = true;
  return d;
}

/// Stationarity refinement of the decoding times for fixed (n_K, gamma).
struct KKTReport {
  std::vector<double> n_star;        ///< refined free times n_1..n_{K-1}
  std::vector<double> delta_n;       ///< n_star - schedule times
  std::vector<double> g_values;      ///< g(n) at the refined times
  std::vector<double> f_values;      ///< f(n) = F'(n) at the refined times
  std::vector<double> big_f_values;  ///< F(n) at the refined times
  double n_of_n_star = 0.0;
  double n_of_schedule = 0.0;
  double gap = 0.0;            ///< n_of_n_star - n_of_schedule (<= 0)
  double predicted_gap = 0.0;  ///< -L sqrt(n_1 / ln_(K)(n_1))
  double l_constant = 0.0;
  int iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> residuals;
  bool delta_order_ok = true;  ///< |delta_n_i| = O(sqrt(n_i)) sanity flag
  double eps_prime_stationary_ratio = 0.0;  ///< diagnostic: eps'_N vs stationary eps'*_N order
};

/// Solves the first-order optimality system for the average-decoding-time
/// objective N(n) = n_1 + sum_i (n_{i+1}-n_i) Q(g(n_i)) with n_K and gamma
/// fixed, by damped Newton on the K-1 stationarity equations
///   F(n_1) - (n_2-n_1) f(n_1) = 0,
///   F(n_k) - F(n_{k-1}) - (n_{k+1}-n_k) f(n_k) = 0.
/// g is evaluated against the slacked threshold gamma + K ln J(P), which makes
/// g equal sqrt(ln_(K-k+1)(n_k)) exactly at a schedule solving the defining
/// equations.
inline KKTReport kkt_refine(const Schedule& schedule, double gamma, double snr) {
  schedule.validate();
  const int k = schedule.k();
  if (k < 2) throw ValidationError("kkt_refine: need K >= 2");
  const auto ch = ChannelParams::from_snr(snr);
  const double gamma_eff = gamma + k * ch.log_j;
  const double sqrt_v = std::sqrt(ch.dispersion);

  auto g = [&](double n) { return (n * ch.capacity - gamma_eff) / (sqrt_v * std::sqrt(n)); };
  auto g_prime = [&](double n) {
    return (n * ch.capacity + gamma_eff) / (2.0 * sqrt_v * n * std::sqrt(n));
  };
  auto big_f = [&](double n) { return 1.0 - gaussian_q(g(n)); };
  auto f = [&](double n) { return gaussian_pdf(g(n)) * g_prime(n); };
  auto f_prime = [&](double n) {
    const double gn = g(n);
    const double gp = g_prime(n);
    const double gpp = -(n * ch.capacity + 3.0 * gamma_eff) / (4.0 * sqrt_v * n * n * std::sqrt(n));
    return gaussian_pdf(gn) * (gpp - gn * gp * gp);
  };

  const int nfree = k - 1;
  std::vector<double> x(static_cast<std::size_t>(nfree));
  for (int i = 0; i < nfree; ++i) x[static_cast<std::size_t>(i)] =
      static_cast<double>(schedule.times[static_cast<std::size_t>(i)]);
  const double n_last = static_cast<double>(schedule.times.back());

  auto residual = [&](const std::vector<double>& t) {
    std::vector<double> r(static_cast<std::size_t>(nfree));
    for (int i = 0; i < nfree; ++i) {
      const double ti = t[static_cast<std::size_t>(i)];
      const double next = i + 1 < nfree ? t[static_cast<std::size_t>(i) + 1] : n_last;
      double ri = big_f(ti) - (next - ti) * f(ti);
      if (i > 0) ri -= big_f(t[static_cast<std::size_t>(i) - 1]);
      r[static_cast<std::size_t>(i)] = ri;
    }
    return r;
  };
  auto norm_inf = [](const std::vector<double>& v) {
    double m = 0.0;
    for (const auto e : v) m = std::max(m, std::abs(e));
    return m;
  };

  std::vector<double> r = residual(x);
  double rn = norm_inf(r);
  int iterations = 0;
  for (int it = 0; it < 100 && rn > 1e-10; ++it) {
    iterations = it + 1;
    // Tridiagonal Jacobian: sub = -f(x_{i-1}), diag = 2 f(x_i) - (next-x_i) f'(x_i),
    // super = -f(x_i).
    std::vector<double> sub(static_cast<std::size_t>(nfree), 0.0);
    std::vector<double> diag(static_cast<std::size_t>(nfree), 0.0);
    std::vector<double> sup(static_cast<std::size_t>(nfree), 0.0);
    for (int i = 0; i < nfree; ++i) {
      const double ti = x[static_cast<std::size_t>(i)];
      const double next = i + 1 < nfree ? x[static_cast<std::size_t>(i) + 1] : n_last;
      diag[static_cast<std::size_t>(i)] = 2.0 * f(ti) - (next - ti) * f_prime(ti);
      if (i > 0) sub[static_cast<std::size_t>(i)] = -f(x[static_cast<std::size_t>(i) - 1]);
      if (i + 1 < nfree) sup[static_cast<std::size_t>(i)] = -f(ti);
    }
    // Thomas solve of J * step = -r.
    std::vector<double> c(static_cast<std::size_t>(nfree), 0.0);
    std::vector<double> dvec(static_cast<std::size_t>(nfree), 0.0);
    double beta = diag[0];
    if (beta == 0.0) throw NonConvergenceError("kkt_refine: singular Jacobian", x[0], rn, it);
    c[0] = nfree > 1 ? sup[0] / beta : 0.0;
    dvec[0] = -r[0] / beta;
    for (int i = 1; i < nfree; ++i) {
      beta = diag[static_cast<std::size_t>(i)] -
             sub[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i) - 1];
      if (beta == 0.0) {
        throw NonConvergenceError("kkt_refine: singular Jacobian", x[static_cast<std::size_t>(i)],
                                  rn, it);
      }
      if (i + 1 < nfree) c[static_cast<std::size_t>(i)] = sup[static_cast<std::size_t>(i)] / beta;
      dvec[static_cast<std::size_t>(i)] =
          (-r[static_cast<std::size_t>(i)] -
           sub[static_cast<std::size_t>(i)] * dvec[static_cast<std::size_t>(i) - 1]) /
          beta;
    }
    std::vector<double> step(static_cast<std::size_t>(nfree));
    step[static_cast<std::size_t>(nfree) - 1] = dvec[static_cast<std::size_t>(nfree) - 1];
    for (int i = nfree - 2; i >= 0; --i) {
      step[static_cast<std::size_t>(i)] = dvec[static_cast<std::size_t>(i)] -
                                          c[static_cast<std::size_t>(i)] *
                                              step[static_cast<std::size_t>(i) + 1];
    }
    double step_inf = 0.0;
    for (const auto s : step) step_inf = std::max(step_inf, std::abs(s));
    double scale = 1.0;
    const double trust = 0.25 * n_last;
    if (step_inf > trust) scale = trust / step_inf;
    for (int halving = 0; halving <= 30; ++halving) {
      std::vector<double> cand = x;
      bool ordered = true;
      for (int i = 0; i < nfree; ++i) {
        cand[static_cast<std::size_t>(i)] += scale * step[static_cast<std::size_t>(i)];
        if (cand[static_cast<std::size_t>(i)] <= 0.0) ordered = false;
      }
      for (int i = 0; ordered && i + 1 < nfree; ++i) {
        if (cand[static_cast<std::size_t>(i)] >= cand[static_cast<std::size_t>(i) + 1]) {
          ordered = false;
        }
      }
      if (ordered && cand.back() < n_last) {
        const auto rc = residual(cand);
        const double rcn = norm_inf(rc);
        if (rcn < rn || halving == 30) {
          x = cand;
          r = rc;
          rn = rcn;
          break;
        }
      }
      scale *= 0.5;
      if (halving == 30) {
        throw NonConvergenceError("kkt_refine: damping failed to reduce the residual", x[0], rn,
                                  it);
      }
    }
  }
  if (rn > 1e-6) {
    throw NonConvergenceError("kkt_refine: stationarity residual too large", x[0], rn, iterations);
  }

  auto objective = [&](const std::vector<double>& free_times) {
    double total = free_times[0];
    for (int i = 0; i < nfree; ++i) {
      const double ti = free_times[static_cast<std::size_t>(i)];
      const double next = i + 1 < nfree ? free_times[static_cast<std::size_t>(i) + 1] : n_last;
      total += (next - ti) * gaussian_q(g(ti));
    }
    return total;
  };

  KKTReport rep;
  rep.n_star = x;
  rep.iterations = iterations;
  rep.residual_norm = rn;
  rep.residuals = r;
  std::vector<double> tilde(static_cast<std::size_t>(nfree));
  for (int i = 0; i < nfree; ++i) {
    tilde[static_cast<std::size_t>(i)] =
        static_cast<double>(schedule.times[static_cast<std::size_t>(i)]);
    rep.delta_n.push_back(x[static_cast<std::size_t>(i)] - tilde[static_cast<std::size_t>(i)]);
    rep.g_values.push_back(g(x[static_cast<std::size_t>(i)]));
    rep.f_values.push_back(f(x[static_cast<std::size_t>(i)]));
    rep.big_f_values.push_back(big_f(x[static_cast<std::size_t>(i)]));
    if (std::abs(rep.delta_n.back()) > 20.0 * std::sqrt(tilde[static_cast<std::size_t>(i)])) {
      rep.delta_order_ok = false;
    }
  }
  rep.n_of_n_star = objective(x);
  rep.n_of_schedule = objective(tilde);
  rep.gap = rep.n_of_n_star - rep.n_of_schedule;
  rep.l_constant = (std::log(std::sqrt(2.0 * std::numbers::pi)) +
                    1.0 / std::sqrt(2.0 * std::numbers::pi) - 1.0) *
                   sqrt_v / ch.capacity;
  const double n1 = tilde[0];
  rep.predicted_gap = nested_log_defined(k, n1) && nested_log(k, n1) > 0.0
                          ? -rep.l_constant * std::sqrt(n1 / nested_log(k, n1))
                          : std::numeric_limits<double>::quiet_NaN();
  // Report-only diagnostic: the construction's eps'_N = 1/sqrt(n ln n) against the
  // stationary-order value 1/(sqrt(n ln_(2)(n)) ln n) at n = n_K.
  const double eps_prime_used = 1.0 / std::sqrt(n_last * std::log(n_last));
  const double eps_prime_star =
      nested_log_defined(2, n_last) && nested_log(2, n_last) > 0.0
          ? 1.0 / (std::sqrt(n_last * nested_log(2, n_last)) * std::log(n_last))
          : std::numeric_limits<double>::quiet_NaN();
  rep.eps_prime_stationary_ratio = eps_prime_used / eps_prime_star;
  return rep;
}

/// Grid spacing of the K = infinity construction, clamped to at least 1.
inline std::int64_t k_infinity_grid_spacing(double n_prime, double log_j, double cap) {
  const double raw = std::sqrt(n_prime * log_j / cap);
  return std::max<std::int64_t>(1, std::llround(raw));
}

/// Design with an unbounded number of decoding times on the uniform grid
/// {l, 2l, ...}: l = round(sqrt(N' ln J / C)), gamma = N'C - lC - (N'/l) ln J + o1,
/// ln M = gamma - ln N', with the decode-at-zero split using eps'_N = 1/N'.
inline CodeDesign k_infinity_design(double n_target, double eps, double snr,
                                    double o1_constant = 0.0,
                                    const DesignOptions& opts = {}) {
  if (!(n_target > 1.0)) throw ValidationError("k_infinity_design: n_target must be > 1");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("k_infinity_design: eps outside (0,1)");
  const auto ch = ChannelParams::from_snr(snr);
  const auto split = zero_decode_split(n_target, eps, /*k_infinite=*/true);
  if (split.degenerate && opts.strict_feasibility) {
    throw InfeasibleError("k_infinity_design: eps below 1/N' at this scale");
  }
  const double n_prime = split.n_prime;
  const std::int64_t ell = k_infinity_grid_spacing(n_prime, ch.log_j, ch.capacity);
  const double mu = ch.capacity - ch.log_j / static_cast<double>(ell);
  if (!(mu > 0.0)) {
    throw InfeasibleError("k_infinity_design: non-positive drift, C(P) <= ln J(P)/l");
  }
  const double gamma = n_prime * ch.capacity - static_cast<double>(ell) * ch.capacity -
                       n_prime / static_cast<double>(ell) * ch.log_j + o1_constant;
  if (!(gamma > 0.0)) {
    throw InfeasibleError("k_infinity_design: n_target too small, gamma <= 0");
  }
  CodeDesign d;
  d.grid_spacing = ell;
  d.gamma = gamma;
  d.ln_m = gamma - std::log(n_prime);
  d.m = detail::message_count_from_ln(d.ln_m);
  d.p_zero = split.p;
  d.eps_prime = split.eps_prime;
  d.n_target = n_target;
  d.n_prime = n_prime;
  d.eps_target = eps;
  d.snr = snr;
  d.lift_degenerate = split.degenerate;
  d.p_zero_range_warning = split.p > 0.999;
  const AsymptoticSpec spec{Regime::kKinfMaxPower, 0, n_target, eps, snr};
  const auto pt = asymptotic_rate(spec);
  d.predicted_ln_m = pt.ln_m;
  d.predicted_rate = pt.rate;
  d.rate_ratio = pt.rate / (ch.capacity / (1.0 - eps));
  d.dropped_terms = pt.dropped_terms;
  return d;
}

}  // namespace vlsf
