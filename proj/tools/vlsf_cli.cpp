// Command-line surface for the VLSF coding toolbox: rate curves, non-asymptotic
// bound evaluation, code design, end-to-end simulation, the summary table, and a
// quick self-test. Every output embeds (tool version, seed, full config) so a
// rerun with the same triple is byte-identical.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlsf/cli_core.hpp"
#include "vlsf/errors.hpp"
#include "vlsf/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNonConvergence = 4;

int dispatch(vlsf::RunConfig& config) {
  using namespace vlsf;
  if (config.format.empty()) {
    const bool json_default = config.command == "bound" || config.command == "optimize" ||
                              config.command == "simulate";
    config.format = json_default ? "json" : "csv";
  }
  if (config.out.empty() && config.command != "selftest") {
    const bool as_json = config.format == "json" || config.command == "optimize" ||
                         config.command == "simulate";
    config.out = config.command + (as_json ? ".json" : ".csv");
  }
  if (config.command == "rates") {
    const auto res = run_rates(config);
    std::cout << "wrote " << res.rows.size() << " rows to " << res.output.path << "\n";
    return kExitOk;
  }
  if (config.command == "table") {
    const auto res = run_table(config);
    std::cout << "wrote " << res.rows.size() << " rows to " << res.output.path << "\n";
    return kExitOk;
  }
  if (config.command == "optimize") {
    const auto res = run_optimize(config);
    std::cout << "design: gamma=" << res.design.gamma << " ln_m=" << res.design.ln_m
              << " p_zero=" << res.design.p_zero
              << " rate_ratio=" << res.design.rate_ratio << " -> " << res.output.path << "\n";
    return kExitOk;
  }
  if (config.command == "bound") {
    const auto res = run_bound(config);
    std::cout << "eps_upper=" << res.report.eps_upper << " n_upper=" << res.report.n_upper
              << " -> " << res.output.path << "\n";
    return kExitOk;
  }
  if (config.command == "simulate") {
    const auto res = run_simulate(config);
    if (res.stats) {
      std::cout << "eps_hat=" << res.stats->eps_hat << " tau_mean=" << res.stats->tau_mean
                << " -> " << res.output.path << "\n";
    } else {
      std::cout << "xi_mean=" << res.renewal->xi_mean
                << " lorden_bound=" << res.renewal->lorden_bound << " -> " << res.output.path
                << "\n";
    }
    return kExitOk;
  }
  if (config.command == "selftest") {
    const auto res = run_selftest(config);
    for (const auto& line : res.lines) std::cout << line << "\n";
    std::cout << (res.failures == 0 ? "selftest OK" : "selftest FAILED") << "\n";
    return res.failures == 0 ? kExitOk : 1;
  }
  throw ValidationError("unknown command: " + config.command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VLSF coding toolbox for the unit-noise AWGN channel"};
  app.set_version_flag("--version", vlsf::kToolVersion);

  vlsf::RunConfig config;
  config.format.clear();  // resolved per command after parsing
  std::string n_grid_spec;
  std::string times_spec;
  std::string mode = "joint";

  app.add_option("--command", config.command, "rates|bound|optimize|simulate|table|selftest")
      ->required();
  auto* snr_opt = app.add_option("--snr", config.snr, "channel SNR P (> 0)");
  app.add_option("--eps", config.eps, "target average error probability");
  app.add_option("--n-grid", n_grid_spec, "N grid: lo:hi:points[:log|lin] or comma list");
  app.add_option("--k-set", config.k_set, "decoding-time counts for rates/table (0 = K=inf)")
      ->delimiter(',');
  app.add_option("--trials", config.trials, "Monte Carlo trials");
  app.add_option("--seed", config.seed, "RNG seed (recorded in all outputs)");
  app.add_option("--out", config.out, "output path (default <command>.csv/.json)");
  app.add_option("--format", config.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--mode", mode, "bound evaluation mode")
      ->check(CLI::IsMember({"joint", "marginal"}));
  app.add_flag("--joint{joint},--marginal{marginal}", mode,
               "shorthand for --mode joint|marginal");
  app.add_flag("--fixed-codebook", config.fixed_codebook,
               "simulate one codebook realization instead of the ensemble");
  app.add_option("--in", config.in_path, "input design JSON (bound/simulate)");
  auto* gamma_opt = app.add_option("--gamma", config.gamma, "decoding threshold (bound)");
  app.add_option("--m", config.m, "message count (bound)");
  app.add_option("--times", times_spec, "comma-separated decoding times (bound)");
  app.add_option("--n", config.n_point, "target average decoding time N (optimize/table)");
  app.add_option("--k", config.k_value, "decoding times K for optimize (0 = K=inf)");
  app.add_option("--m-cap", config.m_cap, "cap the designed message count (optimize/simulate)");
  app.add_option("--o1-constant", config.o1_constant, "O(1) slot in the K=inf threshold");
  app.add_option("--threads", config.threads, "worker threads (0 = hardware)");
  app.add_option("--sim-engine", config.sim_engine, "auto|vectors|sufficient_stats")
      ->check(CLI::IsMember({"auto", "vectors", "sufficient_stats"}));
  app.add_flag("--no-j-slack", config.no_j_slack,
               "drop the k*lnJ threshold slack (exploratory runs)");
  app.add_flag("--trace", config.trace, "write a per-trial trace CSV (single-threaded)");
  app.add_flag("--strict", config.strict, "hard error when eps < eps'_N instead of degrading");

  try {
    app.parse(argc, argv);
    config.snr_explicit = snr_opt->count() > 0;
    config.gamma_set = gamma_opt->count() > 0;
    if (!n_grid_spec.empty()) config.n_grid = vlsf::parse_grid(n_grid_spec);
    if (!times_spec.empty()) {
      for (const auto v : vlsf::parse_grid(times_spec)) {
        config.times.push_back(static_cast<std::int64_t>(v));
      }
    }
    if (!(config.snr > 0.0)) throw vlsf::ValidationError("--snr must be > 0");
    config.mode = mode == "marginal" ? vlsf::TailMode::kMarginal : vlsf::TailMode::kJoint;
    return dispatch(config);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  } catch (const vlsf::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const vlsf::NonConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const vlsf::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const vlsf::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
