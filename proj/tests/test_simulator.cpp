#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "vlsf/simulator.hpp"

using namespace vlsf;

namespace {

CodeDesign make_design(std::vector<std::int64_t> times, double gamma, std::int64_t m,
                       double p_zero = 0.0, double snr = 1.0) {
  CodeDesign d;
  d.schedule = Schedule::of(std::move(times));
  d.gamma = gamma;
  d.m = m;
  d.ln_m = std::log(static_cast<double>(m));
  d.p_zero = p_zero;
  d.snr = snr;
  d.n_prime = static_cast<double>(d.schedule.horizon());
  d.n_target = d.n_prime;
  d.eps_target = 0.5;
  d.eps_prime = 0.1;
  return d;
}

}  // namespace

TEST_SUITE_BEGIN("simulator");

TEST_CASE("sentinel threshold: everyone crosses at the first time") {
  auto d = make_design({4, 8}, -std::numeric_limits<double>::infinity(), 8);
  SimOptions opts;
  opts.engine = SimEngine::kVectors;
  const auto stats = simulate_code(d, 4000, 11, opts);
  CHECK(stats.forced_count == 0);
  CHECK(stats.stop_counts[0] == 4000);
  CHECK(stats.tau_mean == 4.0);
  // the max-index rule decodes message M; error unless W = M
  const double expected = 1.0 - 1.0 / 8.0;
  CHECK(std::abs(stats.eps_hat - expected) <
        4.0 * std::sqrt(expected * (1.0 - expected) / 4000.0));
}

TEST_CASE("single message is always decoded correctly") {
  for (const double gamma : {-2.0, 100.0}) {
    auto d = make_design({6}, gamma, 1);
    const auto stats = simulate_code(d, 3000, 7, {});
    CHECK(stats.eps_hat == 0.0);
  }
}

TEST_CASE("production decoder matches the literal transcription") {
  // Every (tau*, decision) must agree across message counts, schedules,
  // thresholds, and slack settings on freshly drawn noise.
  std::int64_t checked = 0;
  for (const std::int64_t m : {1, 2, 3, 4}) {
    for (const auto& times : {std::vector<std::int64_t>{3}, std::vector<std::int64_t>{6},
                              std::vector<std::int64_t>{2, 5}, std::vector<std::int64_t>{3, 6}}) {
      for (const double gamma : {-1.0, 0.5, 2.0, 6.0}) {
        for (const bool slack : {true, false}) {
          const auto schedule = Schedule::of(times);
          for (int rep = 0; rep < 40; ++rep) {
            const std::uint64_t key =
                stream_key(4242, stream_tag::kTrial,
                           static_cast<std::uint64_t>(checked), static_cast<std::uint64_t>(rep));
            const auto cb = generate_codebook(m, schedule, 1.0, key);
            RandomStream noise(stream_key(key, stream_tag::kNoise, 0));
            RandomStream wrng(stream_key(key, stream_tag::kTrial, 1));
            const auto w = wrng.uniform_index(m);
            std::vector<double> y(static_cast<std::size_t>(schedule.horizon()));
            const auto x = cb.codeword(w);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + noise.normal();
            const auto produced = decode_received(cb, y, gamma, slack);
            const auto thr = decoding_thresholds(schedule, gamma, 1.0, slack);
            const auto expected = oracle::brute_force_decode(cb, y, thr);
            REQUIRE(produced.stop_time == expected.stop_time);
            REQUIRE(produced.decision == expected.decision);
            REQUIRE(produced.crossed == expected.crossed);
            ++checked;
          }
        }
      }
    }
  }
  CHECK(checked > 5000);
}

TEST_CASE("lowering gamma never delays a trial's stop") {
  auto base = make_design({3, 6}, 0.0, 4);
  SimOptions opts;
  opts.engine = SimEngine::kVectors;
  opts.record_trace = true;
  std::vector<std::vector<std::int64_t>> taus;
  for (const double gamma : {6.0, 2.0, 0.5}) {
    auto d = base;
    d.gamma = gamma;
    const auto stats = simulate_code(d, 2000, 99, opts);
    std::vector<std::int64_t> t;
    for (const auto& row : stats.trace) t.push_back(row.tau);
    taus.push_back(std::move(t));
  }
  for (std::size_t g = 1; g < taus.size(); ++g) {
    for (std::size_t i = 0; i < taus[g].size(); ++i) {
      CHECK(taus[g][i] <= taus[g - 1][i]);
    }
  }
}

TEST_CASE("identical seed and any thread count give identical statistics") {
  auto d = make_design({32, 64}, 32.0 * capacity(1.0) - 4.0, 64);
  for (const auto engine : {SimEngine::kVectors, SimEngine::kSufficientStats}) {
    SimOptions one;
    one.engine = engine;
    one.threads = 1;
    SimOptions eight = one;
    eight.threads = 8;
    const auto a = simulate_code(d, 60000, 2718, one);
    const auto b = simulate_code(d, 60000, 2718, eight);
    CHECK(a.errors == b.errors);
    CHECK(a.eps_hat == b.eps_hat);
    CHECK(a.tau_mean == b.tau_mean);
    CHECK(a.stop_counts == b.stop_counts);
    CHECK(a.forced_count == b.forced_count);
  }
}

TEST_CASE("the two engines sample the same law") {
  // Mixed stopping regime: some trials stop at n_1, some at n_2, some forced.
  const double gamma = 24.0 * capacity(1.0) - 1.5;
  auto d = make_design({24, 48}, gamma, 16);
  SimOptions vec;
  vec.engine = SimEngine::kVectors;
  SimOptions fast;
  fast.engine = SimEngine::kSufficientStats;
  const std::int64_t trials = 150000;
  const auto a = simulate_code(d, trials, 1001, vec);
  const auto b = simulate_code(d, trials, 2002, fast);
  const double sigma_eps = std::sqrt(std::pow(a.eps_ci_half / 1.96, 2) +
                                     std::pow(b.eps_ci_half / 1.96, 2));
  CHECK(std::abs(a.eps_hat - b.eps_hat) < 4.0 * sigma_eps);
  const double sigma_tau = std::sqrt(std::pow(a.tau_ci_half / 1.96, 2) +
                                     std::pow(b.tau_ci_half / 1.96, 2));
  CHECK(std::abs(a.tau_mean - b.tau_mean) < 4.0 * sigma_tau);
  for (std::size_t k = 0; k < a.stop_counts.size(); ++k) {
    const double pa = static_cast<double>(a.stop_counts[k]) / trials;
    const double pb = static_cast<double>(b.stop_counts[k]) / trials;
    const double sigma = std::sqrt((pa * (1 - pa) + pb * (1 - pb)) / trials);
    CHECK(std::abs(pa - pb) < 5.0 * std::max(sigma, 1e-9));
  }
}

TEST_CASE("zero-decode randomization") {
  auto d = make_design({0, 5}, 2.0, 4, /*p_zero=*/0.3);
  const auto stats = simulate_code(d, 50000, 31, {});
  const double zr = static_cast<double>(stats.zero_decodes) / 50000.0;
  CHECK(std::abs(zr - 0.3) < 4.0 * std::sqrt(0.3 * 0.7 / 50000.0));
  CHECK(stats.stop_counts[0] == stats.zero_decodes);  // gamma > 0: time 0 cannot cross
  // zero-decode trials output message 1, so 3/4 of them err
  CHECK(stats.eps_hat >= 0.3 * 0.75 - 0.02);
  // histogram partitions the trials
  std::int64_t total = stats.forced_count;
  for (const auto c : stats.stop_counts) total += c;
  CHECK(total == stats.trials);
  CHECK(stats.tau_mean >= 0.0);
  CHECK(stats.tau_mean <= 5.0);

  auto bad = d;
  bad.schedule = Schedule::of({3, 6});
  CHECK_THROWS_AS(simulate_code(bad, 10, 1, {}), ValidationError);
}

TEST_CASE("fixed-codebook mode simulates one realization") {
  auto d = make_design({24, 48}, 24.0 * capacity(1.0) - 1.5, 8);
  SimOptions fixed;
  fixed.fresh_codebook = false;
  const auto a = simulate_code(d, 30000, 5, fixed);
  const auto b = simulate_code(d, 30000, 5, fixed);
  CHECK(a.engine_used == SimEngine::kVectors);  // ensemble sampling cannot pin a codebook
  CHECK(a.errors == b.errors);
  CHECK(a.tau_mean == b.tau_mean);
  SimOptions bad = fixed;
  bad.engine = SimEngine::kSufficientStats;
  CHECK_THROWS_AS(simulate_code(d, 100, 5, bad), ValidationError);
}

TEST_CASE("validation and resource guards") {
  auto d = make_design({4}, 1.0, 1 << 15);
  CHECK_THROWS_AS(simulate_code(d, 10, 1, {}), ResourceError);  // above the default cap
  auto inf = make_design({4}, 1.0, 4);
  inf.grid_spacing = 100;
  CHECK_THROWS_AS(simulate_code(inf, 10, 1, {}), ValidationError);
  auto huge = make_design({4}, 1.0, 4);
  huge.m = -1;  // designed M beyond integer range
  CHECK_THROWS_AS(simulate_code(huge, 10, 1, {}), ValidationError);
}

TEST_CASE("bound dominance in a mixed stopping regime") {
  // At a very small target the designed message count is itself small, the
  // threshold is comparable to n_1 C(P), and every stopping branch fires:
  // zero-decodes, crossings at both times, forced decisions, impostor errors.
  const auto design = design_vlsf_code(40.0, 3, 0.3, 1.0);
  REQUIRE(design.m > 1);
  REQUIRE(design.m < 200);
  const auto bound = evaluate_threshold_bound(design.schedule, design.gamma, design.m,
                                              design.snr, 400000, 77, TailMode::kJoint);
  const double p = design.p_zero;
  const double eps_tot = p + (1.0 - p) * bound.eps_upper;
  const double n_tot = (1.0 - p) * bound.n_upper;
  for (const auto engine : {SimEngine::kVectors, SimEngine::kSufficientStats}) {
    SimOptions opts;
    opts.engine = engine;
    const auto sim = simulate_code(design, 200000, 88, opts);
    CHECK(sim.zero_decodes > 0);
    CHECK(sim.stop_counts[1] > 0);
    CHECK(sim.stop_counts[2] > 0);
    CHECK(sim.forced_count > 0);
    const double sig_eps = std::sqrt(std::pow(sim.eps_ci_half / 1.96, 2) +
                                     std::pow((1.0 - p) * bound.marginal_stderr.back(), 2));
    const double sig_tau = std::sqrt(std::pow(sim.tau_ci_half / 1.96, 2) +
                                     std::pow((1.0 - p) * bound.n_upper_stderr, 2));
    CHECK(sim.eps_hat <= eps_tot + 3.0 * sig_eps);
    CHECK(sim.tau_mean <= n_tot + 3.0 * sig_tau);
  }
}

TEST_CASE("renewal walk with deterministic increments") {
  const double mu = 0.4;
  const auto rs =
      simulate_renewal_core([mu](RandomStream&) { return mu; }, 10.2, 200, 5, 0, 1000);
  // S_k = 0.4 k first exceeds 10.2 at k = 26 = ceil(threshold/mu)
  CHECK(rs.xi_mean == doctest::Approx(std::ceil(10.2 / mu)).epsilon(1e-12));
  CHECK(rs.xi_var == 0.0);
  // Lorden with m = mu^2: threshold/mu + 1
  CHECK(rs.xi_mean <= 10.2 / mu + 1.0);
  CHECK(rs.b1_mean == doctest::Approx(mu));
  CHECK(rs.m_hat == doctest::Approx(mu * mu));
}

TEST_CASE("renewal simulation of the K-infinity scheme meets its design target") {
  // Inner design at N' = 1e4: l = 293 and gamma from the threshold rule.
  const auto ch = ChannelParams::from_snr(1.0);
  const std::int64_t ell = k_infinity_grid_spacing(1e4, ch.log_j, ch.capacity);
  REQUIRE(ell == 293);
  const double gamma = 1e4 * ch.capacity - static_cast<double>(ell) * ch.capacity -
                       1e4 / static_cast<double>(ell) * ch.log_j;
  const auto rs = simulate_renewal(ell, gamma, 1.0, 20000, 321);
  CHECK(rs.mu_lower == doctest::Approx(ch.capacity - ch.log_j / 293.0));
  // E[tau] = l E[xi] <= N' within confidence, and Lorden dominates the mean
  CHECK(static_cast<double>(ell) * rs.xi_mean <=
        1e4 + 3.0 * static_cast<double>(ell) * rs.xi_ci_half / 1.96);
  CHECK(rs.xi_mean <= rs.lorden_bound + 3.0 * rs.xi_ci_half / 1.96);
  CHECK(rs.b1_mean == doctest::Approx(rs.mu_lower).epsilon(0.01));
}

TEST_CASE("zero threshold crosses on the first positive-drift step") {
  const auto rs = simulate_renewal(293, 0.0, 1.0, 5000, 77);
  // P[B_1 <= 0] ~ Q(9.4): essentially every walk stops at step one.
  CHECK(rs.xi_mean == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(rs.b1_pos_fraction > 0.999);
  CHECK(rs.xi_mean <= 1.0 / rs.b1_pos_fraction + 3.0 * rs.xi_ci_half / 1.96);
}

TEST_CASE("renewal drift precondition") {
  // l = 1 makes C(P) - lnJ(P) strongly negative.
  CHECK_THROWS_AS(simulate_renewal(1, 10.0, 1.0, 10, 1), InfeasibleError);
}

TEST_CASE("martingale identity checks") {
  const auto zero = martingale_check(0, 1.0, 100, 1);
  CHECK(zero.mean == 1.0);
  for (const auto [n, snr] : {std::pair{1, 1.0}, std::pair{5, 1.0}, std::pair{20, 4.0}}) {
    const auto rep = martingale_check(n, snr, 1000000, 17);
    CHECK(rep.within_four_sigma);
  }
}

TEST_SUITE_END();
