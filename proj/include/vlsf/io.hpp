#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlsf/bounds.hpp"
#include "vlsf/codebook.hpp"
#include "vlsf/errors.hpp"
#include "vlsf/optimizer.hpp"
#include "vlsf/simulator.hpp"
#include "vlsf/version.hpp"

namespace vlsf {

using json = nlohmann::json;

/// Shortest round-trip decimal form of a double; keeps CSV output byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void to_json(json& j, const Schedule& s) { j = s.times; }
inline void from_json(const json& j, Schedule& s) {
  s.times = j.get<std::vector<std::int64_t>>();
  s.validate();
}

inline void to_json(json& j, const MomentSet& m) {
  j = json{{"mean", m.mean}, {"variance", m.variance}, {"mu3", m.mu3}};
}

inline void to_json(json& j, const McEstimate& e) {
  j = json{{"value", e.value}, {"stderr", e.stderr_}, {"trials", e.trials}};
}

inline void to_json(json& j, const BoundReport& r) {
  j = json{{"marginal_tail", r.marginal_tail},
           {"marginal_stderr", r.marginal_stderr},
           {"raw_tail", r.raw_tail},
           {"joint_tail", r.joint_tail},
           {"joint_stderr", r.joint_stderr},
           {"eps_upper", r.eps_upper},
           {"union_term", r.union_term},
           {"union_term_log", r.union_term_log},
           {"n_upper", r.n_upper},
           {"n_upper_stderr", r.n_upper_stderr},
           {"mode", r.mode == TailMode::kJoint ? "joint" : "marginal"},
           {"trials", r.trials},
           {"seed", r.seed},
           {"gamma", r.gamma},
           {"snr", r.snr},
           {"m", r.m},
           {"times", r.times},
           {"slack_counts", r.slack_counts}};
}

inline void to_json(json& j, const AsymptoticPoint& p) {
  j = json{{"regime", regime_name(p.regime)}, {"k", p.k},         {"n", p.n},
           {"eps", p.eps},                    {"p", p.p},         {"rate", p.rate},
           {"ln_m", p.ln_m},                  {"dropped_terms", p.dropped_terms}};
}

inline void to_json(json& j, const CodeDesign& d) {
  j = json{{"schedule", d.schedule.times},
           {"gamma", d.gamma},
           {"ln_m", d.ln_m},
           {"m", d.m},
           {"p_zero", d.p_zero},
           {"eps_prime", d.eps_prime},
           {"n_target", d.n_target},
           {"n_prime", d.n_prime},
           {"eps_target", d.eps_target},
           {"snr", d.snr},
           {"grid_spacing", d.grid_spacing},
           {"predicted_ln_m", d.predicted_ln_m},
           {"predicted_rate", d.predicted_rate},
           {"rate_ratio", d.rate_ratio},
           {"dropped_terms", d.dropped_terms},
           {"lift_degenerate", d.lift_degenerate},
           {"p_zero_range_warning", d.p_zero_range_warning},
           {"m_capped", d.m_capped},
           {"solver", json{{"gamma_iterations", d.gamma_iterations},
                           {"gamma_residual", d.gamma_residual},
                           {"schedule_residuals", d.schedule_residuals},
                           {"real_times", d.real_times}}}};
}

inline void from_json(const json& j, CodeDesign& d) {
  if (!j.at("schedule").empty()) {
    d.schedule.times = j.at("schedule").get<std::vector<std::int64_t>>();
    d.schedule.validate();
  } else {
    d.schedule.times.clear();
  }
  j.at("gamma").get_to(d.gamma);
  j.at("ln_m").get_to(d.ln_m);
  j.at("m").get_to(d.m);
  j.at("p_zero").get_to(d.p_zero);
  j.at("eps_prime").get_to(d.eps_prime);
  j.at("n_target").get_to(d.n_target);
  j.at("n_prime").get_to(d.n_prime);
  j.at("eps_target").get_to(d.eps_target);
  j.at("snr").get_to(d.snr);
  j.at("grid_spacing").get_to(d.grid_spacing);
  d.predicted_ln_m = j.value("predicted_ln_m", 0.0);
  d.predicted_rate = j.value("predicted_rate", 0.0);
  d.rate_ratio = j.value("rate_ratio", 0.0);
  d.dropped_terms = j.value("dropped_terms", std::vector<std::string>{});
  d.lift_degenerate = j.value("lift_degenerate", false);
  d.p_zero_range_warning = j.value("p_zero_range_warning", false);
  d.m_capped = j.value("m_capped", false);
}

inline void to_json(json& j, const KKTReport& r) {
  j = json{{"n_star", r.n_star},
           {"delta_n", r.delta_n},
           {"g_values", r.g_values},
           {"f_values", r.f_values},
           {"big_f_values", r.big_f_values},
           {"n_of_n_star", r.n_of_n_star},
           {"n_of_schedule", r.n_of_schedule},
           {"gap", r.gap},
           {"predicted_gap", r.predicted_gap},
           {"l_constant", r.l_constant},
           {"iterations", r.iterations},
           {"residual_norm", r.residual_norm},
           {"residuals", r.residuals},
           {"delta_order_ok", r.delta_order_ok},
           {"eps_prime_stationary_ratio", r.eps_prime_stationary_ratio}};
}

inline void to_json(json& j, const SimStats& s) {
  json hist = json::object();
  for (std::size_t i = 0; i < s.stop_counts.size(); ++i) {
    hist[std::to_string(s.stop_times[i])] = s.stop_counts[i];
  }
  hist["forced_at_n_K"] = s.forced_count;
  j = json{{"trials", s.trials},
           {"errors", s.errors},
           {"zero_decodes", s.zero_decodes},
           {"eps_hat", s.eps_hat},
           {"eps_ci_half", s.eps_ci_half},
           {"tau_mean", s.tau_mean},
           {"tau_ci_half", s.tau_ci_half},
           {"stop_histogram", hist},
           {"engine", engine_name(s.engine_used)},
           {"seed", s.seed},
           {"m", s.m}};
}

inline void to_json(json& j, const RenewalStats& r) {
  j = json{{"trials", r.trials},
           {"xi_mean", r.xi_mean},
           {"xi_ci_half", r.xi_ci_half},
           {"xi_var", r.xi_var},
           {"threshold", r.threshold},
           {"mu_lower", r.mu_lower},
           {"m_hat", r.m_hat},
           {"b1_mean", r.b1_mean},
           {"b1_pos_fraction", r.b1_pos_fraction},
           {"lorden_bound", r.lorden_bound},
           {"ell", r.ell},
           {"gamma", r.gamma},
           {"snr", r.snr},
           {"seed", r.seed}};
}

inline void to_json(json& j, const MartingaleReport& r) {
  j = json{{"n", r.n},
           {"trials", r.trials},
           {"mean", r.mean},
           {"stderr", r.stderr_},
           {"deviation_sigmas", r.deviation_sigmas},
           {"within_four_sigma", r.within_four_sigma},
           {"seed", r.seed}};
}

/// Metadata block embedded in every output file: tool version, seed, full config.
inline json output_metadata(std::uint64_t seed, const json& config) {
  return json{{"tool_version", kToolVersion}, {"seed", seed}, {"config", config}};
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file " + path);
  out << content;
  if (!out) throw ValidationError("write failed for " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open input file " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace vlsf
