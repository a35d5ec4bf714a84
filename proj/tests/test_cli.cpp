#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "vlsf/cli_core.hpp"

using namespace vlsf;

TEST_SUITE_BEGIN("cli");

TEST_CASE("grid parsing") {
  const auto list = parse_grid("100,200,500");
  REQUIRE(list.size() == 3);
  CHECK(list[1] == 200.0);
  const auto log_grid = parse_grid("1000:1000000:4:log");
  REQUIRE(log_grid.size() == 4);
  CHECK(log_grid.front() == 1000.0);
  CHECK(log_grid.back() == 1000000.0);
  CHECK(log_grid[1] == doctest::Approx(10000.0));
  const auto lin = parse_grid("10:30:3:lin");
  CHECK(lin[1] == 20.0);
  CHECK_THROWS_AS(parse_grid("10:5:2"), ValidationError);
  CHECK_THROWS_AS(parse_grid(""), ValidationError);
}

namespace {

RunConfig base_config() {
  RunConfig c;
  c.seed = 4711;
  c.trials = 20000;
  return c;
}

std::map<std::pair<std::string, int>, double> rate_lookup(const RatesResult& res, double n) {
  std::map<std::pair<std::string, int>, double> out;
  for (const auto& row : res.rows) {
    if (row.n == n && row.defined) out[{row.regime, row.k}] = row.rate;
  }
  return out;
}

}  // namespace

TEST_CASE("rates command reproduces the headline curve ordering") {
  auto c = base_config();
  c.command = "rates";
  c.n_grid = {1000.0, 10000.0, 100000.0};
  const auto res = run_rates(c);
  for (const double n : c.n_grid) {
    const auto rates = rate_lookup(res, n);
    const double conv = rates.at({"converse", 0});
    CHECK(rates.at({"finiteK", 4}) > rates.at({"finiteK", 3}));
    CHECK(rates.at({"finiteK", 3}) > rates.at({"finiteK", 2}));
    for (const auto& [key, rate] : rates) {
      if (key.first != "converse") CHECK(rate < conv);
    }
  }
  // spot values at N = 1000
  const auto rates = rate_lookup(res, 1000.0);
  CHECK(rates.at({"k1_maxpower", 1}) == doctest::Approx(0.2902).epsilon(7e-4));
  CHECK(rates.at({"converse", 0}) == doctest::Approx(0.34693).epsilon(3e-4));
}

TEST_CASE("rates output is byte-identical across reruns") {
  auto c = base_config();
  c.command = "rates";
  c.n_grid = {1000.0, 5000.0};
  const auto a = run_rates(c);
  const auto b = run_rates(c);
  CHECK(a.output.content == b.output.content);
  CHECK(a.output.content.find("# tool_version=") != std::string::npos);
  CHECK(a.output.content.find("# seed=4711") != std::string::npos);
  CHECK(a.output.content.find("# config=") != std::string::npos);
}

TEST_CASE("rates marks nested-log domain gaps instead of aborting") {
  auto c = base_config();
  c.command = "rates";
  c.n_grid = {10.0};  // ln_(3)(10) < 0: the K=4 second-order term leaves the domain
  c.k_set = {4};
  const auto res = run_rates(c);
  REQUIRE(res.rows.size() == 2);
  CHECK_FALSE(res.rows[0].defined);
  CHECK(res.rows[0].flags.find("undefined") == 0);
  CHECK(res.rows[1].regime == "converse");
}

TEST_CASE("table command is internally consistent with rates") {
  auto c = base_config();
  c.command = "table";
  c.n_point = 1000.0;
  const auto table = run_table(c);
  auto cr = base_config();
  cr.command = "rates";
  cr.n_grid = {1000.0};
  const auto rates = rate_lookup(run_rates(cr), 1000.0);
  bool saw_finite = false;
  bool saw_kinf = false;
  for (const auto& row : table.rows) {
    if (row.scenario == "variable_length" && row.constraint == "max_power" &&
        row.k_label != "inf") {
      const int k = std::stoi(row.k_label);
      REQUIRE(row.first_value.has_value());
      REQUIRE(row.second_lb_value.has_value());
      const double rate = (*row.first_value + *row.second_lb_value) / 1000.0;
      CHECK(rate == doctest::Approx(rates.at({"finiteK", k})).epsilon(1e-12));
      saw_finite = true;
    }
    if (row.scenario == "variable_length" && row.constraint == "max_power" &&
        row.k_label == "inf") {
      // -sqrt(N 4 C lnJ / (1-eps)) by direct substitution
      const double expect = -std::sqrt(1000.0 * 4.0 * capacity(1.0) * log_j_constant(1.0) /
                                       (1.0 - c.eps));
      CHECK(*row.second_lb_value == doctest::Approx(expect).epsilon(1e-12));
      saw_kinf = true;
    }
  }
  CHECK(saw_finite);
  CHECK(saw_kinf);
  // feedback does not change the K=1 max-power second-order term
  const TableRow* nofb = nullptr;
  const TableRow* fb = nullptr;
  for (const auto& row : table.rows) {
    if (row.scenario == "fixed_length" && row.constraint == "max_power") {
      (row.feedback == "no" ? nofb : fb) = &row;
    }
  }
  REQUIRE(nofb != nullptr);
  REQUIRE(fb != nullptr);
  CHECK(nofb->second_lb == fb->second_lb);
  CHECK(*nofb->second_lb_value == *fb->second_lb_value);
}

TEST_CASE("optimize -> bound -> simulate round trip through files") {
  const std::string design_path = "cli_roundtrip_design.json";
  auto c = base_config();
  c.command = "optimize";
  c.n_point = 2000.0;
  c.k_value = 3;
  c.eps = 0.05;
  c.m_cap = 256;
  c.out = design_path;
  const auto opt = run_optimize(c);
  CHECK(opt.design.m == 256);
  CHECK(opt.kkt.has_value());
  CHECK(opt.kkt->gap <= 1e-9);

  auto cb = base_config();
  cb.command = "bound";
  cb.in_path = design_path;
  cb.trials = 50000;
  const auto bound = run_bound(cb);
  CHECK(bound.report.n_upper >= static_cast<double>(opt.design.schedule.times[1]));
  CHECK(bound.report.eps_upper > 0.0);

  auto cs = base_config();
  cs.command = "simulate";
  cs.in_path = design_path;
  cs.trials = 20000;
  const auto sim = run_simulate(cs);
  REQUIRE(sim.stats.has_value());
  // lifted bound dominates the lifted simulation
  const double p = opt.design.p_zero;
  const double eps_tot = p + (1.0 - p) * bound.report.eps_upper;
  const double n_tot = (1.0 - p) * bound.report.n_upper;
  const double sigma_eps = sim.stats->eps_ci_half / 1.96;
  const double sigma_tau = sim.stats->tau_ci_half / 1.96;
  CHECK(sim.stats->eps_hat <= eps_tot + 3.0 * std::max(sigma_eps, 1e-6));
  CHECK(sim.stats->tau_mean <= n_tot + 3.0 * std::max(sigma_tau, 1e-6));
  std::remove(design_path.c_str());
}

TEST_CASE("optimize reports the predicted rate ratio at the headline point") {
  auto c = base_config();
  c.command = "optimize";
  c.n_point = 1000.0;
  c.k_value = 4;
  c.eps = 1e-3;
  const auto res = run_optimize(c);
  CHECK(res.design.rate_ratio == doctest::Approx(0.954).epsilon(0.0021));
  const auto& j = res.output.payload.at("design");
  CHECK(j.contains("p_zero"));
  CHECK(j.contains("gamma"));
  CHECK(j.contains("schedule"));
  CHECK(j.contains("rate_ratio"));
  // deterministic rerun is byte-identical
  const auto again = run_optimize(c);
  CHECK(res.output.content == again.output.content);
}

TEST_CASE("bound on an uncapped design stays inside the designed error budget") {
  const std::string design_path = "cli_budget_design.json";
  auto c = base_config();
  c.command = "optimize";
  c.n_point = 2000.0;
  c.k_value = 3;
  c.eps = 0.05;
  c.out = design_path;
  const auto opt = run_optimize(c);
  CHECK(opt.design.m == -1);  // designed M exceeds the integer range
  auto cb = base_config();
  cb.command = "bound";
  cb.in_path = design_path;
  cb.trials = 100000;
  const auto bound = run_bound(cb);
  CHECK(bound.report.m == -1);
  // union term from ln M: (M-1)e^{-gamma} = 1/N' up to rounding
  CHECK(bound.report.union_term == doctest::Approx(1.0 / opt.design.n_prime).epsilon(1e-9));
  CHECK(bound.report.eps_upper <= 0.05);
  CHECK(bound.report.eps_upper <= opt.design.eps_prime +
                                      3.0 * bound.report.marginal_stderr.back());
  std::remove(design_path.c_str());
}

TEST_CASE("simulate validates the channel against the design") {
  const std::string design_path = "cli_mismatch_design.json";
  auto c = base_config();
  c.command = "optimize";
  c.n_point = 1500.0;
  c.k_value = 2;
  c.eps = 0.05;
  c.m_cap = 64;
  c.out = design_path;
  run_optimize(c);
  auto cs = base_config();
  cs.command = "simulate";
  cs.in_path = design_path;
  cs.snr = 2.0;
  cs.snr_explicit = true;
  CHECK_THROWS_AS(run_simulate(cs), ValidationError);
  auto cb = base_config();
  cb.command = "bound";
  cb.in_path = design_path;
  cb.snr = 2.0;
  cb.snr_explicit = true;
  CHECK_THROWS_AS(run_bound(cb), ValidationError);
  std::remove(design_path.c_str());
}

TEST_CASE("bound requires a complete parameter set") {
  auto c = base_config();
  c.command = "bound";
  CHECK_THROWS_AS(run_bound(c), ValidationError);
  c.times = {50, 100};
  c.gamma = 10.0;
  c.gamma_set = true;
  c.m = 4;
  c.trials = 10000;
  const auto res = run_bound(c);
  CHECK(res.report.n_upper >= 50.0);
}

TEST_CASE("K-infinity optimize routes simulate to the renewal run") {
  const std::string design_path = "cli_kinf_design.json";
  auto c = base_config();
  c.command = "optimize";
  c.n_point = 9000.0;
  c.k_value = 0;
  c.eps = 0.05;
  c.out = design_path;
  const auto opt = run_optimize(c);
  CHECK(opt.design.grid_spacing > 0);
  auto cs = base_config();
  cs.command = "simulate";
  cs.in_path = design_path;
  cs.trials = 5000;
  const auto sim = run_simulate(cs);
  REQUIRE(sim.renewal.has_value());
  CHECK(sim.renewal->xi_mean <= sim.renewal->lorden_bound + 3.0 * sim.renewal->xi_ci_half / 1.96);
  std::remove(design_path.c_str());
}

TEST_CASE("design JSON round trips through the serializer") {
  const auto d = design_vlsf_code(2000.0, 3, 0.05, 1.0);
  const json j = d;
  const auto back = j.get<CodeDesign>();
  CHECK(back.schedule.times == d.schedule.times);
  CHECK(back.gamma == d.gamma);
  CHECK(back.ln_m == d.ln_m);
  CHECK(back.p_zero == d.p_zero);
  CHECK(back.n_prime == d.n_prime);
  CHECK(back.grid_spacing == d.grid_spacing);
}

TEST_SUITE_END();
