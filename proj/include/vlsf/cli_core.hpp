#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vlsf/bounds.hpp"
#include "vlsf/channel.hpp"
#include "vlsf/io.hpp"
#include "vlsf/optimizer.hpp"
#include "vlsf/simulator.hpp"
#include "vlsf/version.hpp"

namespace vlsf {

/// Parsed command-line configuration; the CLI front end fills it, every run_*
/// function consumes it. Defaults reproduce the headline rate figure.
struct RunConfig {
  std::string command;
  double snr = 1.0;
  bool snr_explicit = false;
  double eps = 1e-3;
  std::vector<double> n_grid;
  std::vector<int> k_set = {1, 2, 3, 4};
  std::int64_t trials = 100000;
  std::uint64_t seed = 20250801;
  std::string out;
  std::string format = "csv";
  TailMode mode = TailMode::kJoint;
  bool fixed_codebook = false;
  std::string in_path;
  double gamma = 0.0;
  bool gamma_set = false;
  std::int64_t m = 0;
  std::vector<std::int64_t> times;
  double n_point = 1000.0;
  int k_value = 4;
  std::int64_t m_cap = 0;
  double o1_constant = 0.0;
  unsigned threads = 0;
  std::string sim_engine = "auto";
  bool no_j_slack = false;
  bool trace = false;
  bool strict = false;
};

inline json config_json(const RunConfig& c) {
  return json{{"command", c.command},
              {"snr", c.snr},
              {"eps", c.eps},
              {"n_grid", c.n_grid},
              {"k_set", c.k_set},
              {"trials", c.trials},
              {"seed", c.seed},
              {"format", c.format},
              {"mode", c.mode == TailMode::kJoint ? "joint" : "marginal"},
              {"fixed_codebook", c.fixed_codebook},
              {"in", c.in_path},
              {"gamma", c.gamma_set ? json(c.gamma) : json()},
              {"m", c.m},
              {"times", c.times},
              {"n", c.n_point},
              {"k", c.k_value},
              {"m_cap", c.m_cap},
              {"o1_constant", c.o1_constant},
              {"sim_engine", c.sim_engine},
              {"no_j_slack", c.no_j_slack},
              {"trace", c.trace},
              {"strict", c.strict}};
}

inline std::vector<double> default_n_grid() {
  std::vector<double> g;
  const int points = 25;
  for (int i = 0; i < points; ++i) {
    const double expo = 3.0 + 3.0 * static_cast<double>(i) / (points - 1);
    g.push_back(std::round(std::pow(10.0, expo)));
  }
  return g;
}

/// "lo:hi:points[:log|lin]" or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 3 || parts.size() > 4) {
      throw ValidationError("grid spec must be lo:hi:points[:log|lin]");
    }
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const int points = std::stoi(parts[2]);
    const bool log_scale = parts.size() < 4 || parts[3] == "log";
    if (points < 1 || !(lo > 0.0) || !(hi >= lo)) throw ValidationError("bad grid spec");
    for (int i = 0; i < points; ++i) {
      const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
      out.push_back(log_scale ? std::round(std::pow(10.0, std::log10(lo) +
                                                              f * (std::log10(hi) - std::log10(lo))))
                              : std::round(lo + f * (hi - lo)));
    }
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw ValidationError("empty grid");
  return out;
}

struct RunOutput {
  std::string path;
  std::string content;
  json payload;
};

inline std::string metadata_comment(const RunConfig& c) {
  std::string s;
  s += "# tool_version=";
  s += kToolVersion;
  s += "\n# seed=" + std::to_string(c.seed) + "\n";
  s += "# config=" + config_json(c).dump() + "\n";
  return s;
}

inline void maybe_write(const RunConfig& c, RunOutput& out) {
  if (!c.out.empty()) {
    out.path = c.out;
    write_text_file(c.out, out.content);
  }
}

struct RateRow {
  double n = 0.0;
  std::string regime;
  int k = 0;
  double rate = 0.0;
  bool defined = true;
  std::string flags;
};

struct RatesResult {
  std::vector<RateRow> rows;
  RunOutput output;
};

inline std::string join_flags(const std::vector<std::string>& dropped) {
  if (dropped.empty()) return "exact";
  std::string s = "dropped:";
  for (std::size_t i = 0; i < dropped.size(); ++i) {
    if (i) s += "+";
    s += dropped[i];
  }
  return s;
}

/// Rate-vs-N plot data: one row per (N, regime, K) plus the converse, all at the
/// configured (eps, P). Nested-log domain errors become flagged gap rows.
inline RatesResult run_rates(const RunConfig& config) {
  RatesResult res;
  const auto grid = config.n_grid.empty() ? default_n_grid() : config.n_grid;
  for (const double n : grid) {
    for (const int k : config.k_set) {
      RateRow row;
      row.n = n;
      row.k = k;
      AsymptoticSpec spec;
      spec.n = n;
      spec.eps = config.eps;
      spec.snr = config.snr;
      if (k == 1) {
        spec.regime = Regime::kK1MaxPower;
      } else if (k == 0) {
        spec.regime = Regime::kKinfMaxPower;
      } else {
        spec.regime = Regime::kFiniteK;
        spec.k = k;
      }
      row.regime = regime_name(spec.regime);
      try {
        const auto pt = asymptotic_rate(spec);
        row.rate = pt.rate;
        row.flags = join_flags(pt.dropped_terms);
      } catch (const std::domain_error& err) {
        row.defined = false;
        row.flags = std::string("undefined: ") + err.what();
      }
      res.rows.push_back(row);
    }
    RateRow conv;
    conv.n = n;
    conv.k = 0;
    conv.regime = regime_name(Regime::kConverse);
    conv.rate = converse_rate(n, config.eps, config.snr);
    conv.flags = "exact";
    res.rows.push_back(conv);
  }

  if (config.format == "json") {
    json rows = json::array();
    for (const auto& r : res.rows) {
      rows.push_back(json{{"n", r.n},
                          {"regime", r.regime},
                          {"k", r.k},
                          {"rate", r.defined ? json(r.rate) : json()},
                          {"flags", r.flags}});
    }
    res.output.payload = json{{"meta", output_metadata(config.seed, config_json(config))},
                              {"rows", rows}};
    res.output.content = res.output.payload.dump(2) + "\n";
  } else {
    std::string s = metadata_comment(config);
    s += "n,regime,k,rate,flags\n";
    for (const auto& r : res.rows) {
      s += format_double(r.n) + "," + r.regime + "," + std::to_string(r.k) + "," +
           (r.defined ? format_double(r.rate) : std::string()) + "," + r.flags + "\n";
    }
    res.output.content = s;
  }
  maybe_write(config, res.output);
  return res;
}

struct TableRow {
  std::string scenario;
  std::string constraint;
  std::string feedback;
  std::string k_label;
  std::string first_order;
  std::string second_lb;
  std::string second_ub;
  std::string cite_lb;
  std::string cite_ub;
  std::optional<double> first_value;
  std::optional<double> second_lb_value;
  std::optional<double> second_ub_value;
};

struct TableResult {
  std::vector<TableRow> rows;
  RunOutput output;
};

/// Summary table of first/second-order terms across power-constraint and
/// feedback scenarios, evaluated numerically at (n_point, eps, P) where the
/// cell is a closed form.
inline TableResult run_table(const RunConfig& config) {
  TableResult res;
  const double n = config.n_point;
  const double eps = config.eps;
  const double p = config.snr;
  const double c = capacity(p);
  const double v = dispersion(p);
  const double boosted = p / (1.0 - eps);
  const double so_k1_max = -std::sqrt(n * v) * gaussian_q_inv(eps);
  const double so_avg = -std::sqrt(n * std::log(n) * dispersion(boosted));

  auto add = [&](TableRow r) { res.rows.push_back(std::move(r)); };

  add({"fixed_length", "max_power", "no", "1", "N*C(P)", "-sqrt(N*V(P))*Qinv(eps)",
       "-sqrt(N*V(P))*Qinv(eps)", "tan-tomamichel-2015;polyanskiy-2010", "polyanskiy-2010",
       n * c, so_k1_max, so_k1_max});
  add({"fixed_length", "avg_power", "no", "1", "N*C(P/(1-eps))", "-sqrt(N*ln(N)*V(P/(1-eps)))",
       "-sqrt(N*ln(N)*V(P/(1-eps)))", "yang-2015", "yang-2015", n * capacity(boosted), so_avg,
       so_avg});
  add({"fixed_length", "max_power", "yes", "1", "N*C(P)", "-sqrt(N*V(P))*Qinv(eps)",
       "-sqrt(N*V(P))*Qinv(eps)", "tan-tomamichel-2015;polyanskiy-2010", "fong-tan-2015",
       n * c, so_k1_max, so_k1_max});
  add({"fixed_length", "avg_power", "yes", "1", "N*C(P/(1-eps))", "-O(ln(N))",
       "+sqrt(N*ln(N)*V(P/(1-eps)))", "truong-fong-2017", "truong-fong-2017",
       n * capacity(boosted), std::nullopt, -so_avg});
  for (const int k : config.k_set) {
    if (k < 2) continue;
    std::optional<double> so_lb;
    std::string flags = "-sqrt(N*ln_(" + std::to_string(k - 1) + ")(N)*V(P)/(1-eps))";
    if (nested_log_defined(k - 1, n) && nested_log(k - 1, n) >= 0.0) {
      so_lb = -std::sqrt(n * nested_log(k - 1, n) * v / (1.0 - eps));
    }
    add({"variable_length", "max_power", "stop", std::to_string(k), "N*C(P)/(1-eps)", flags,
         "+O(1)", "vlsf-finite-k", "truong-tan-2016", n * c / (1.0 - eps), so_lb, std::nullopt});
    add({"variable_length", "avg_power", "stop", std::to_string(k), "N*C(P)/(1-eps)", flags,
         "+O(1)", "vlsf-finite-k", "truong-tan-2016", n * c / (1.0 - eps), so_lb, std::nullopt});
  }
  const double so_kinf = -std::sqrt(n * 4.0 * c * log_j_constant(p) / (1.0 - eps));
  add({"variable_length", "max_power", "stop", "inf", "N*C(P)/(1-eps)",
       "-sqrt(N*4*C(P)*lnJ(P)/(1-eps))", "+O(1)", "vlsf-k-infinity", "truong-tan-2016",
       n * c / (1.0 - eps), so_kinf, std::nullopt});
  add({"variable_length", "avg_power", "stop", "inf", "N*C(P)/(1-eps)", "-ln(N)", "+O(1)",
       "truong-tan-2016", "truong-tan-2016", n * c / (1.0 - eps), -std::log(n), std::nullopt});

  auto opt_str = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  if (config.format == "json") {
    json rows = json::array();
    for (const auto& r : res.rows) {
      rows.push_back(json{{"scenario", r.scenario},
                          {"constraint", r.constraint},
                          {"feedback", r.feedback},
                          {"k", r.k_label},
                          {"first_order", r.first_order},
                          {"second_order_lb", r.second_lb},
                          {"second_order_ub", r.second_ub},
                          {"citation_lb", r.cite_lb},
                          {"citation_ub", r.cite_ub},
                          {"first_order_value", r.first_value ? json(*r.first_value) : json()},
                          {"second_order_lb_value",
                           r.second_lb_value ? json(*r.second_lb_value) : json()},
                          {"second_order_ub_value",
                           r.second_ub_value ? json(*r.second_ub_value) : json()}});
    }
    res.output.payload = json{{"meta", output_metadata(config.seed, config_json(config))},
                              {"rows", rows}};
    res.output.content = res.output.payload.dump(2) + "\n";
  } else {
    std::string s = metadata_comment(config);
    s += "scenario,constraint,feedback,k,first_order,second_order_lb,second_order_ub,"
         "citation_lb,citation_ub,first_order_value,second_order_lb_value,second_order_ub_value\n";
    for (const auto& r : res.rows) {
      s += r.scenario + "," + r.constraint + "," + r.feedback + "," + r.k_label + "," +
           r.first_order + "," + r.second_lb + "," + r.second_ub + "," + r.cite_lb + "," +
           r.cite_ub + "," + opt_str(r.first_value) + "," + opt_str(r.second_lb_value) + "," +
           opt_str(r.second_ub_value) + "\n";
    }
    res.output.content = s;
  }
  maybe_write(config, res.output);
  return res;
}

inline CodeDesign load_design(const std::string& path) {
  const auto text = read_text_file(path);
  json j = json::parse(text);
  if (j.contains("design")) j = j.at("design");
  CodeDesign d = j.get<CodeDesign>();
  return d;
}

struct OptimizeResult {
  CodeDesign design;
  std::optional<KKTReport> kkt;
  RunOutput output;
};

/// Designs a code for (n_point, k_value, eps, P); k_value 0 requests the
/// K = infinity construction. Applies an optional message-count cap and, when
/// the inner schedule has at least two times, attaches the KKT refinement.
inline OptimizeResult run_optimize(const RunConfig& config) {
  OptimizeResult res;
  DesignOptions dopts;
  dopts.strict_feasibility = config.strict;
  if (config.k_value == 0) {
    res.design = k_infinity_design(config.n_point, config.eps, config.snr, config.o1_constant,
                                   dopts);
  } else {
    res.design = design_vlsf_code(config.n_point, config.k_value, config.eps, config.snr, dopts);
  }
  if (res.design.grid_spacing == 0 && res.design.schedule.k() >= 3) {
    std::vector<std::int64_t> inner(res.design.schedule.times.begin() + 1,
                                    res.design.schedule.times.end());
    res.kkt = kkt_refine(Schedule::of(inner), res.design.gamma, config.snr);
  }
  if (config.m_cap > 0) res.design = cap_message_count(res.design, config.m_cap);
  json j{{"meta", output_metadata(config.seed, config_json(config))},
         {"design", res.design},
         {"kkt", res.kkt ? json(*res.kkt) : json()}};
  res.output.payload = j;
  res.output.content = j.dump(2) + "\n";
  maybe_write(config, res.output);
  return res;
}

struct BoundResult {
  BoundReport report;
  RunOutput output;
};

/// Evaluates the non-asymptotic bound either on a designed code (--in) or on
/// explicit (--times, --gamma, --m) parameters.
inline BoundResult run_bound(const RunConfig& config) {
  Schedule schedule;
  double gamma = 0.0;
  std::int64_t m = 0;
  double ln_m_override = std::numeric_limits<double>::quiet_NaN();
  double snr = config.snr;
  if (!config.in_path.empty()) {
    const auto design = load_design(config.in_path);
    if (design.grid_spacing > 0) {
      throw ValidationError("bound: K = infinity designs have no finite schedule to evaluate");
    }
    if (config.snr_explicit && std::abs(config.snr - design.snr) > 1e-12) {
      throw ValidationError("bound: --snr disagrees with the design's snr");
    }
    schedule = design.schedule;
    gamma = design.gamma;
    m = design.m;
    snr = design.snr;
    if (m < 0) ln_m_override = design.ln_m;
  } else {
    if (config.times.empty() || !config.gamma_set || config.m < 1) {
      throw ValidationError("bound: need --in or all of --times, --gamma, --m");
    }
    schedule = Schedule::of(config.times);
    gamma = config.gamma;
    m = config.m;
  }
  BoundResult res;
  res.report = evaluate_threshold_bound(schedule, gamma, m < 1 ? 2 : m, snr, config.trials, config.seed,
                             config.mode, config.threads);
  if (std::isfinite(ln_m_override)) {
    // Designed M exceeds integer range: take the union term from ln M directly.
    res.report.m = -1;
    res.report.union_term_log = std::log(std::expm1(ln_m_override)) - gamma;
    res.report.union_term = std::exp(res.report.union_term_log);
    res.report.eps_upper = res.report.marginal_tail.back() + res.report.union_term;
  }
  json j{{"meta", output_metadata(config.seed, config_json(config))}, {"bound", res.report}};
  res.output.payload = j;
  if (config.format == "csv") {
    // One row per decoding time plus a summary row.
    std::string s = metadata_comment(config);
    s += "row,k,time,slack_count,marginal_tail,marginal_stderr,raw_tail,joint_tail,"
         "joint_stderr,eps_upper,n_upper,n_upper_stderr,union_term_log\n";
    const auto& r = res.report;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      const bool has_joint = i + 1 < r.times.size();
      s += "time," + std::to_string(i + 1) + "," + std::to_string(r.times[i]) + "," +
           std::to_string(r.slack_counts[i]) + "," + format_double(r.marginal_tail[i]) + "," +
           format_double(r.marginal_stderr[i]) + "," + format_double(r.raw_tail[i]) + "," +
           (has_joint ? format_double(r.joint_tail[i]) : std::string()) + "," +
           (has_joint ? format_double(r.joint_stderr[i]) : std::string()) + ",,,,\n";
    }
    s += "summary,,,,,,,,," + format_double(r.eps_upper) + "," + format_double(r.n_upper) + "," +
         format_double(r.n_upper_stderr) + "," + format_double(r.union_term_log) + "\n";
    res.output.content = s;
  } else {
    res.output.content = j.dump(2) + "\n";
  }
  maybe_write(config, res.output);
  return res;
}

struct SimulateResult {
  std::optional<SimStats> stats;
  std::optional<RenewalStats> renewal;
  RunOutput output;
};

/// Simulates a designed code end to end; K = infinity designs run the renewal
/// simulation on the uniform grid instead.
inline SimulateResult run_simulate(const RunConfig& config) {
  if (config.in_path.empty()) throw ValidationError("simulate: --in <design.json> is required");
  const auto design = load_design(config.in_path);
  if (config.snr_explicit && std::abs(config.snr - design.snr) > 1e-12) {
    throw ValidationError("simulate: --snr disagrees with the design's snr");
  }
  SimulateResult res;
  if (design.grid_spacing > 0) {
    res.renewal = simulate_renewal(design.grid_spacing, design.gamma, design.snr, config.trials,
                                   config.seed, config.threads);
  } else {
    SimOptions opts;
    opts.threads = config.threads;
    opts.fresh_codebook = !config.fixed_codebook;
    opts.j_slack = !config.no_j_slack;
    opts.record_trace = config.trace;
    if (config.m_cap > 0) opts.m_cap = config.m_cap;
    if (config.sim_engine == "vectors") {
      opts.engine = SimEngine::kVectors;
    } else if (config.sim_engine == "sufficient_stats") {
      opts.engine = SimEngine::kSufficientStats;
    }
    res.stats = simulate_code(design, config.trials, config.seed, opts);
  }
  json j{{"meta", output_metadata(config.seed, config_json(config))},
         {"design_in", config.in_path},
         {"sim", res.stats ? json(*res.stats) : json()},
         {"renewal", res.renewal ? json(*res.renewal) : json()}};
  res.output.payload = j;
  res.output.content = j.dump(2) + "\n";
  if (res.stats && config.trace) {
    std::string tr = "trial,w,zero,tau,decision,error\n";
    for (const auto& row : res.stats->trace) {
      tr += std::to_string(row.trial) + "," + std::to_string(row.w) + "," +
            std::to_string(row.zero_decode ? 1 : 0) + "," + std::to_string(row.tau) + "," +
            std::to_string(row.decision) + "," + std::to_string(row.error ? 1 : 0) + "\n";
    }
    write_text_file(config.out.empty() ? "trace.csv" : config.out + ".trace.csv", tr);
  }
  maybe_write(config, res.output);
  return res;
}

struct SelfTestResult {
  int failures = 0;
  std::vector<std::string> lines;
};

/// Fast invariant sweep (reduced trial counts, < 60 s) used by `selftest`.
inline SelfTestResult run_selftest(const RunConfig& config) {
  SelfTestResult res;
  auto check = [&](const std::string& name, bool ok) {
    res.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + name);
    if (!ok) ++res.failures;
  };
  const std::uint64_t seed = config.seed;
  const unsigned threads = config.threads;

  check("capacity(1) = ln(2)/2", std::abs(capacity(1.0) - 0.5 * std::log(2.0)) < 1e-15);
  check("dispersion(1) = 3/8", std::abs(dispersion(1.0) - 0.375) < 1e-15);
  check("nested_log(3,1000) ~ 0.659", std::abs(nested_log(3, 1000.0) - 0.659) < 5e-4);
  {
    bool ok = true;
    for (const double x : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
      ok = ok && std::abs(gaussian_q_inv(gaussian_q(x)) - x) < 1e-9;
    }
    check("q_inverse round trip", ok);
  }
  {
    const auto mom = increment_moments(1.0);
    RandomStream rng(stream_key(seed, stream_tag::kMoments, 1));
    const std::int64_t n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double z = rng.normal();
      const double a = mom.mean + 0.25 * (1.0 - z * z + 2.0 * z);
      s += a;
      s2 += a * a;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    check("A moments at P=1 (1e6 draws)",
          std::abs(mean - mom.mean) < 5.0 * std::sqrt(mom.variance / n) &&
              std::abs(var - mom.variance) < 0.02 * mom.variance);
  }
  {
    const auto rep = martingale_check(5, 1.0, 1000000, seed, threads);
    check("martingale identity n=5 (1e6 trials)", rep.within_four_sigma);
  }
  {
    RandomStream rng(stream_key(seed, stream_tag::kSphere, 7));
    const auto v = sample_sphere_point(16, 3.0, rng);
    double nrm = 0.0;
    for (const auto x : v) nrm += x * x;
    check("sphere sample norm", std::abs(std::sqrt(nrm) - 3.0) < 1e-9);
  }
  {
    const std::int64_t n = 500;
    const double z = std::sqrt(nested_log(2, static_cast<double>(n)));
    auto mom = increment_moments(1.0);
    mom.mu3 = -mom.mu3;  // lower tail of the A-sum = upper tail of C - A
    const double pv = petrov_tail(n, z, mom);
    const double thr = n * capacity(1.0) - z * std::sqrt(n * dispersion(1.0));
    const auto mc = tail_prob_mc(n, thr, 1.0, 1000000, seed, threads);
    check("petrov vs monte carlo (n=500, 1e6 trials)", std::abs(mc.value - pv) / pv < 0.2);
  }
  {
    const auto sched = Schedule::of({100, 200});
    const auto rep = evaluate_threshold_bound(sched, 100.0 * capacity(1.0), 2, 1.0, 200000, seed,
                                   TailMode::kJoint, threads);
    const auto repm = evaluate_threshold_bound(sched, 100.0 * capacity(1.0), 2, 1.0, 200000, seed,
                                    TailMode::kMarginal, threads);
    check("threshold bound: joint equals marginal at K=2",
          std::abs(rep.n_upper - repm.n_upper) < 1e-12 &&
              rep.joint_tail[0] == rep.marginal_tail[0]);
  }
  {
    bool ok = true;
    double prev = 0.0;
    for (int k = 2; k <= 4; ++k) {
      const auto pt = asymptotic_rate({Regime::kFiniteK, k, 1000.0, 1e-3, 1.0});
      if (k > 2) ok = ok && pt.rate > prev;
      prev = pt.rate;
    }
    check("rate increases with K at N=1000", ok);
  }
  {
    bool ok = true;
    for (const double n : {1e3, 1e4, 1e5}) {
      const double conv = converse_rate(n, 1e-3, 1.0);
      for (const int k : {1, 2, 3, 4}) {
        AsymptoticSpec spec;
        spec.regime = k == 1 ? Regime::kK1MaxPower : Regime::kFiniteK;
        spec.k = k;
        spec.n = n;
        spec.eps = 1e-3;
        spec.snr = 1.0;
        ok = ok && asymptotic_rate(spec).rate < conv;
      }
    }
    check("converse dominates achievability", ok);
  }
  {
    const double mu = 0.4;
    const auto rs = simulate_renewal_core([mu](RandomStream&) { return mu; }, 10.0, 100, seed,
                                          threads, 1000);
    check("degenerate renewal hits ceil(threshold/mu)",
          rs.xi_mean == std::ceil(10.0 / mu) && rs.xi_mean <= 10.0 / mu + 1.0);
  }
  {
    auto design = design_vlsf_code(2000.0, 3, 0.05, 1.0);
    design = cap_message_count(design, 1 << 10);
    const auto bound = evaluate_threshold_bound(design.schedule, design.gamma, design.m, design.snr, 100000,
                                     seed, TailMode::kJoint, threads);
    const auto sim = simulate_code(design, 20000, seed, {});
    const double p = design.p_zero;
    const double eps_tot = p + (1.0 - p) * bound.eps_upper;
    const double n_tot = (1.0 - p) * bound.n_upper;
    const double sigma_eps =
        std::sqrt(std::pow(sim.eps_ci_half / 1.96, 2) + std::pow(bound.marginal_stderr.back(), 2));
    const double sigma_tau =
        std::sqrt(std::pow(sim.tau_ci_half / 1.96, 2) + std::pow(bound.n_upper_stderr, 2));
    check("bound dominates simulation (desk scale)",
          sim.eps_hat <= eps_tot + 3.0 * sigma_eps && sim.tau_mean <= n_tot + 3.0 * sigma_tau);
  }
  {
    RunConfig rc = config;
    rc.command = "rates";
    rc.out.clear();
    rc.n_grid = {1000.0};
    const auto a = run_rates(rc);
    const auto b = run_rates(rc);
    check("rates output is byte-stable", a.output.content == b.output.content);
  }
  return res;
}

}  // namespace vlsf
