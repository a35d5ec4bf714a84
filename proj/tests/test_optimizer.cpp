#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vlsf/optimizer.hpp"

using namespace vlsf;

TEST_SUITE_BEGIN("optimizer");

TEST_CASE("newton solves a linear equation in one step") {
  int calls = 0;
  const double root = newton_root(
      [&](double x) {
        ++calls;
        return std::pair{x - 5.0, 1.0};
      },
      0.0, 1e-12, 10);
  CHECK(root == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(calls <= 3);
}

TEST_CASE("newton agrees with bisection on x + sqrt(x) = 100") {
  auto f = [](double x) { return std::pair{x + std::sqrt(x) - 100.0, 1.0 + 0.5 / std::sqrt(x)}; };
  const double newton = newton_root(f, 50.0, 1e-10, 100);
  const double oracle_root = oracle::bisect(
      [](double x) { return x + std::sqrt(x) - 100.0; }, 0.0, 100.0, 1e-11);
  CHECK(newton == doctest::Approx(oracle_root).epsilon(1e-8));
  CHECK(newton == doctest::Approx(90.4875).epsilon(1e-5));
}

TEST_CASE("newton reports non-convergence instead of a wrong answer") {
  // x^2 has a vanishing derivative at the start.
  CHECK_THROWS_AS(newton_root([](double x) { return std::pair{x * x + 1.0, 2.0 * x}; }, 0.0,
                              1e-12, 50),
                  NonConvergenceError);
  try {
    newton_root([](double x) { return std::pair{x * x + 1.0, 2.0 * x}; }, 0.0, 1e-12, 50);
  } catch (const NonConvergenceError& e) {
    CHECK(e.residual >= 1.0);  // diagnostics carried out
  }
}

TEST_CASE("time equation: dispersion-free stub collapses to rhs / C") {
  CHECK(solve_time_equation(1, 30.0, 0.3, 0.0) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(solve_time_equation(2, 30.0, 0.3, 0.0) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("time equation residual and well-posedness") {
  const auto ch = ChannelParams::from_snr(1.0);
  for (const int depth : {1, 2, 3}) {
    const double rhs = 300.0;
    const double root = solve_time_equation(depth, rhs, ch.capacity, ch.dispersion);
    const double resid =
        root * ch.capacity - std::sqrt(root * nested_log(depth, root) * ch.dispersion) - rhs;
    CHECK(std::abs(resid) < 1e-6 * rhs);
    // Restarting a local Newton iteration from +-10% away returns the same root.
    auto h = [&](double n) {
      const double nl = nested_log(depth, n);
      const double val = n * ch.capacity - std::sqrt(n * nl * ch.dispersion) - rhs;
      const double eps = 1e-4 * n;
      const double up = (n + eps) * ch.capacity -
                        std::sqrt((n + eps) * nested_log(depth, n + eps) * ch.dispersion) - rhs;
      return std::pair{val, (up - val) / eps};
    };
    for (const double factor : {0.9, 1.1}) {
      const double again = newton_root(h, root * factor, 1e-8, 100);
      CHECK(std::abs(again - root) / root < 1e-4);
    }
  }
}

TEST_CASE("schedule solve hits a constructed root") {
  const auto ch = ChannelParams::from_snr(1.0);
  const double gamma = 1000.0 * ch.capacity -
                       std::sqrt(1000.0 * std::log(1000.0) * ch.dispersion) - 2.0 * ch.log_j;
  const auto sol = solve_decoding_times(2, gamma, 1.0);
  CHECK(std::abs(sol.real_times[1] - 1000.0) <= 1.0);
  CHECK(sol.real_times[0] < sol.real_times[1]);
  for (const auto r : sol.residuals) CHECK(std::abs(r) < 1e-6 * std::abs(gamma));
  CHECK(sol.schedule.times[1] == 1000);
}

TEST_CASE("schedule gaps follow the consecutive-time expansion at N = 1e4") {
  const auto ch = ChannelParams::from_snr(1.0);
  const int k = 3;
  const double n1 = 1e4;
  const double gamma = n1 * ch.capacity -
                       std::sqrt(n1 * nested_log(k, n1) * ch.dispersion) - k * ch.log_j;
  const auto sol = solve_decoding_times(k, gamma, 1.0);
  CHECK(std::abs(sol.real_times[0] - n1) < 1.0);
  for (int i = 0; i + 1 < k; ++i) {
    const double ni = sol.real_times[static_cast<std::size_t>(i)];
    const double gap = sol.real_times[static_cast<std::size_t>(i) + 1] - ni;
    const double predicted =
        (std::sqrt(ni * nested_log(k - i - 1, ni) * ch.dispersion) -
         std::sqrt(ni * nested_log(k - i, ni) * ch.dispersion)) /
        ch.capacity;
    CHECK(std::abs(gap - predicted) / predicted < 0.20);
  }
}

TEST_CASE("schedule solve raises infeasibility when gamma is too small") {
  // rhs/C falls below the ln_(2) domain edge e.
  CHECK_THROWS_AS(solve_decoding_times(2, -5.5, 1.0), InfeasibleError);
}

TEST_CASE("modeled average decoding time") {
  CHECK(predicted_avg_time({123.0}, 40.0, 1.0) == doctest::Approx(123.0));
  // with two times the tail adds a positive fraction of the gap
  const double two = predicted_avg_time({100.0, 150.0}, 100.0 * capacity(1.0) - 5.0, 1.0);
  CHECK(two > 100.0);
  CHECK(two < 150.0);
}

TEST_CASE("design pipeline: target average time is met by the model") {
  const auto d = design_vlsf_code(2000.0, 3, 0.05, 1.0);
  CHECK_FALSE(d.lift_degenerate);
  CHECK(d.p_zero > 0.0);
  CHECK(d.p_zero < 1.0);
  CHECK(d.eps_prime < 0.05);
  CHECK(d.n_prime == doctest::Approx(2000.0 / (1.0 - d.p_zero)).epsilon(1e-9));
  CHECK(d.schedule.times.front() == 0);
  // modeled inner average time equals N'
  CHECK(predicted_avg_time(d.real_times, d.gamma, 1.0) ==
        doctest::Approx(d.n_prime).epsilon(1e-6));
  // message-size rule
  CHECK(d.ln_m == doctest::Approx(d.gamma - std::log(d.n_prime)).epsilon(1e-12));
  // the inner schedule brackets N': first positive time below, second above
  CHECK(static_cast<double>(d.schedule.times[1]) < d.n_prime);
  CHECK(static_cast<double>(d.schedule.times[2]) > d.n_prime);
}

TEST_CASE("design ordering holds across scales") {
  for (const double n : {1e3, 1e4, 1e5}) {
    const auto d = design_vlsf_code(n, 3, 0.05, 1.0);
    CHECK(d.schedule.times[0] == 0);
    CHECK(static_cast<double>(d.schedule.times[1]) < d.n_prime);
    CHECK(static_cast<double>(d.schedule.times[2]) > d.n_prime);
  }
}

TEST_CASE("design boundary behavior in eps") {
  // eps below the construction's eps'_N: soft degradation unless strict.
  const auto deg = design_vlsf_code(1000.0, 4, 1e-3, 1.0);
  CHECK(deg.lift_degenerate);
  CHECK(deg.p_zero == 0.0);
  CHECK(deg.rate_ratio == doctest::Approx(0.954).epsilon(0.0021));
  CHECK_THROWS_AS(design_vlsf_code(1000.0, 4, 1e-3, 1.0, {.strict_feasibility = true}),
                  InfeasibleError);
  // eps -> 1: the zero-decode mass approaches 1 and the range warning fires.
  const auto extreme = design_vlsf_code(1000.0, 2, 0.9995, 1.0);
  CHECK(extreme.p_zero > 0.999);
  CHECK(extreme.p_zero_range_warning);
  CHECK(extreme.n_prime > 1e6);
}

TEST_CASE("designed message size stays within the dropped-term budget") {
  for (const int k : {3, 4}) {
    const double n = 2000.0;
    const auto d = design_vlsf_code(n, k, 0.05, 1.0);
    const double budget = 5.0 * std::sqrt(n * dispersion(1.0) / nested_log(k - 1, n)) +
                          k * log_j_constant(1.0) + std::log(n) + 10.0;
    CHECK(std::abs(d.ln_m - d.predicted_ln_m) < budget);
  }
}

TEST_CASE("message-count capping re-solves gamma") {
  auto d = design_vlsf_code(2000.0, 3, 0.05, 1.0);
  const auto capped = cap_message_count(d, 1 << 10);
  CHECK(capped.m == 1024);
  CHECK(capped.m_capped);
  CHECK(capped.gamma ==
        doctest::Approx(std::log(1024.0) + std::log(d.n_prime)).epsilon(1e-12));
  CHECK(capped.schedule.times == d.schedule.times);
}

TEST_CASE("kkt refinement: single free time (K=2)") {
  const auto ch = ChannelParams::from_snr(1.0);
  const double n1 = 5e3;
  const double gamma = n1 * ch.capacity -
                       std::sqrt(n1 * nested_log(2, n1) * ch.dispersion) - 2.0 * ch.log_j;
  const auto sol = solve_decoding_times(2, gamma, 1.0);
  const auto rep = kkt_refine(sol.schedule, gamma, 1.0);
  CHECK(rep.residual_norm < 1e-6);
  REQUIRE(rep.n_star.size() == 1);
  // F(n1) = (n2 - n1) f(n1) at the stationary point
  CHECK(rep.big_f_values[0] ==
        doctest::Approx((static_cast<double>(sol.schedule.times[1]) - rep.n_star[0]) *
                        rep.f_values[0])
            .epsilon(1e-6));
  CHECK(rep.n_of_n_star <= rep.n_of_schedule + 1e-9);
}

TEST_CASE("kkt refinement at N = 1e4, K = 3") {
  const auto ch = ChannelParams::from_snr(1.0);
  const int k = 3;
  const double n1 = 1e4;
  const double gamma = n1 * ch.capacity -
                       std::sqrt(n1 * nested_log(k, n1) * ch.dispersion) - k * ch.log_j;
  const auto sol = solve_decoding_times(k, gamma, 1.0);
  const auto rep = kkt_refine(sol.schedule, gamma, 1.0);
  CHECK(rep.residual_norm < 1e-6);
  CHECK(rep.delta_n[0] < 0.0);
  CHECK(std::abs(rep.delta_n[1]) < 0.6 * std::abs(rep.delta_n[0]));
  CHECK(rep.gap <= 1e-9);
  CHECK(rep.predicted_gap < 0.0);
  CHECK(std::abs(rep.gap - rep.predicted_gap) / std::abs(rep.predicted_gap) < 0.30);
  CHECK(rep.l_constant ==
        doctest::Approx((std::log(std::sqrt(2.0 * std::numbers::pi)) +
                         1.0 / std::sqrt(2.0 * std::numbers::pi) - 1.0) *
                        std::sqrt(ch.dispersion) / ch.capacity));
  CHECK(rep.delta_order_ok);
}

TEST_CASE("kkt first-time correction stays negative across nearby scales") {
  const auto ch = ChannelParams::from_snr(1.0);
  for (const double n1 : {8e3, 1.2e4, 2e4}) {
    const double gamma = n1 * ch.capacity -
                         std::sqrt(n1 * nested_log(3, n1) * ch.dispersion) - 3.0 * ch.log_j;
    const auto sol = solve_decoding_times(3, gamma, 1.0);
    const auto rep = kkt_refine(sol.schedule, gamma, 1.0);
    CHECK(rep.delta_n[0] < 0.0);
    CHECK(std::abs(rep.delta_n[1]) < std::abs(rep.delta_n[0]));
    CHECK(rep.n_of_n_star <= rep.n_of_schedule + 1e-9);
  }
}

TEST_CASE("grid spacing of the K-infinity design") {
  const auto ch = ChannelParams::from_snr(1.0);
  CHECK(k_infinity_grid_spacing(1e4, ch.log_j, ch.capacity) == 293);
  // vanishing density-ratio stub: the minimum-spacing guard returns 1
  CHECK(k_infinity_grid_spacing(1e4, 1e-12, ch.capacity) == 1);
}

TEST_CASE("K-infinity design stays below the converse at the reference point") {
  const auto d = k_infinity_design(1e4, 1e-3, 1.0);
  CHECK_FALSE(d.lift_degenerate);  // 1/N' < 1e-3 here
  CHECK(d.predicted_rate < converse_rate(1e4, 1e-3, 1.0));
}

TEST_CASE("K-infinity design values") {
  const auto d = k_infinity_design(9000.0, 0.05, 1.0);
  CHECK(d.grid_spacing >= 1);
  CHECK(d.gamma > 0.0);
  CHECK(d.ln_m == doctest::Approx(d.gamma - std::log(d.n_prime)).epsilon(1e-12));
  CHECK(d.eps_prime == doctest::Approx(1.0 / d.n_prime).epsilon(1e-9));
  CHECK(d.schedule.times.empty());
  // achievability sits below the converse at the same point
  CHECK(d.predicted_rate < converse_rate(9000.0, 0.05, 1.0));
  const auto ch = ChannelParams::from_snr(1.0);
  const double ell = static_cast<double>(d.grid_spacing);
  CHECK(d.gamma == doctest::Approx(d.n_prime * ch.capacity - ell * ch.capacity -
                                   d.n_prime / ell * ch.log_j)
                       .epsilon(1e-12));
}

TEST_CASE("root expansion of x + f(x) = y for the sqrt-log family") {
  // f(x) = a sqrt(x ln x) with a = sqrt(V)/C, the shape entering the
  // average-decoding-time recursion.
  const auto ch = ChannelParams::from_snr(1.0);
  const double a = std::sqrt(ch.dispersion) / ch.capacity;
  const double y = 1e6;
  auto f = [&](double x) { return a * std::sqrt(x * std::log(x)); };
  const double x_solved =
      oracle::bisect([&](double x) { return x + f(x) - y; }, 1.0, y, 1e-9);
  const double first_order = y - f(y);
  CHECK(std::abs(x_solved - first_order) / f(y) < 0.05);
}

TEST_SUITE_END();
