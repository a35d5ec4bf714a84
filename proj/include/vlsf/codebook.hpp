#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "vlsf/errors.hpp"
#include "vlsf/rng.hpp"

namespace vlsf {

/// Strictly increasing decoding times n_1 < ... < n_K (channel uses). n_1 may be 0.
struct Schedule {
  std::vector<std::int64_t> times;

  static Schedule of(std::vector<std::int64_t> t) {
    Schedule s{std::move(t)};
    s.validate();
    return s;
  }

  void validate() const {
    if (times.empty()) throw ValidationError("Schedule: needs at least one decoding time");
    if (times.front() < 0) throw ValidationError("Schedule: times must be non-negative");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (times[i] <= times[i - 1]) {
        throw ValidationError("Schedule: times must be strictly increasing");
      }
    }
  }

  int k() const { return static_cast<int>(times.size()); }
  std::int64_t horizon() const { return times.back(); }

  /// Length of the j-th sub-codeword segment (0-based), n_j - n_{j-1} with n_0 = 0.
  std::int64_t segment_length(int j) const {
    return j == 0 ? times[0] : times[static_cast<std::size_t>(j)] -
                                   times[static_cast<std::size_t>(j) - 1];
  }

  /// Number of non-empty segments up to and including time index k (0-based).
  /// This is the multiplier on ln J(P) in the proxy-density slack.
  int slack_count(int k) const {
    int c = 0;
    for (int j = 0; j <= k; ++j) {
      if (segment_length(j) > 0) ++c;
    }
    return c;
  }
};

/// Uniform sample on the sphere of the given radius in `dim` dimensions,
/// by normalizing a vector of independent standard Gaussians.
inline std::vector<double> sample_sphere_point(std::int64_t dim, double radius,
                                               RandomStream& rng) {
  if (dim < 1) throw ValidationError("sample_sphere_point: dim must be >= 1");
  if (!(radius > 0.0)) throw ValidationError("sample_sphere_point: radius must be > 0");
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm_sq += x * x;
    }
  } while (norm_sq == 0.0);
  const double scale = radius / std::sqrt(norm_sq);
  for (auto& x : v) x *= scale;
  return v;
}

/// Random codebook of M codewords, each built from independent per-segment
/// sphere points so that every prefix at a decoding time meets the power
/// constraint with equality.
struct Codebook {
  std::int64_t m = 0;
  std::uint64_t seed = 0;
  double snr = 0.0;
  Schedule schedule;
  std::vector<double> samples;  // m rows of schedule.horizon() reals

  std::span<const double> codeword(std::int64_t i) const {
    const auto n = static_cast<std::size_t>(schedule.horizon());
    return {samples.data() + static_cast<std::size_t>(i) * n, n};
  }
};

inline constexpr std::int64_t kDefaultCodebookBudget = std::int64_t{1} << 26;  // doubles

/// Fills one codeword (length = schedule horizon) segment by segment.
inline void fill_codeword(std::span<double> out, const Schedule& schedule, double snr,
                          RandomStream& rng) {
  std::size_t pos = 0;
  for (int j = 0; j < schedule.k(); ++j) {
    const std::int64_t len = schedule.segment_length(j);
    if (len == 0) continue;
    const auto seg =
        sample_sphere_point(len, std::sqrt(static_cast<double>(len) * snr), rng);
    std::memcpy(out.data() + pos, seg.data(), seg.size() * sizeof(double));
    pos += seg.size();
  }
}

inline Codebook generate_codebook(std::int64_t m, const Schedule& schedule, double snr,
                                  std::uint64_t seed,
                                  std::int64_t max_elements = kDefaultCodebookBudget) {
  schedule.validate();
  if (m < 1) throw ValidationError("generate_codebook: m must be >= 1");
  if (!(snr > 0.0)) throw ValidationError("generate_codebook: snr must be > 0");
  const std::int64_t horizon = schedule.horizon();
  if (horizon > 0 && m > max_elements / horizon) {
    throw ResourceError("generate_codebook: m*n_K = " + std::to_string(m) + "*" +
                        std::to_string(horizon) + " exceeds the memory budget of " +
                        std::to_string(max_elements) + " samples");
  }
  Codebook cb;
  cb.m = m;
  cb.seed = seed;
  cb.snr = snr;
  cb.schedule = schedule;
  cb.samples.resize(static_cast<std::size_t>(m * horizon));
  for (std::int64_t i = 0; i < m; ++i) {
    RandomStream rng(stream_key(seed, stream_tag::kCodebook, static_cast<std::uint64_t>(i)));
    std::span<double> row{cb.samples.data() + static_cast<std::size_t>(i * horizon),
                          static_cast<std::size_t>(horizon)};
    fill_codeword(row, schedule, snr, rng);
  }
  return cb;
}

struct PowerCheck {
  bool ok = true;
  double worst_ratio = 0.0;                    ///< max over (codeword, k) of ||x^{n_k}||^2 / (n_k P)
  std::vector<std::int64_t> violating_words;   ///< codeword indices with any violation
  std::vector<int> first_violation_time;       ///< matching 0-based time index
};

/// Verifies the nested maximal power constraint ||x^{n_k}||^2 <= n_k P (1 + 1e-9)
/// for every codeword at every decoding time.
inline PowerCheck check_power(const Codebook& cb, const Schedule& schedule, double snr) {
  schedule.validate();
  if (schedule.horizon() != cb.schedule.horizon() || schedule.k() != cb.schedule.k()) {
    throw ValidationError("check_power: schedule shape does not match the codebook");
  }
  if (cb.samples.size() != static_cast<std::size_t>(cb.m * schedule.horizon())) {
    throw ValidationError("check_power: codebook sample buffer has the wrong size");
  }
  constexpr double kTol = 1e-9;
  PowerCheck out;
  for (std::int64_t i = 0; i < cb.m; ++i) {
    const auto x = cb.codeword(i);
    double norm_sq = 0.0;
    std::size_t pos = 0;
    bool flagged = false;
    for (int k = 0; k < schedule.k(); ++k) {
      const auto nk = static_cast<std::size_t>(schedule.times[static_cast<std::size_t>(k)]);
      for (; pos < nk; ++pos) norm_sq += x[pos] * x[pos];
      if (nk == 0) continue;
      const double limit = static_cast<double>(nk) * snr;
      const double ratio = norm_sq / limit;
      if (ratio > out.worst_ratio) out.worst_ratio = ratio;
      if (ratio > 1.0 + kTol && !flagged) {
        out.ok = false;
        flagged = true;
        out.violating_words.push_back(i);
        out.first_violation_time.push_back(k);
      }
    }
  }
  return out;
}

namespace detail {
inline constexpr char kCodebookMagic[8] = {'V', 'L', 'S', 'F', 'C', 'B', 'K', '1'};
}

/// Flat binary layout: magic, M, K, times, P, seed, then M * n_K raw doubles.
inline void save_codebook(const std::string& path, const Codebook& cb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("save_codebook: cannot open " + path);
  out.write(detail::kCodebookMagic, sizeof(detail::kCodebookMagic));
  const std::int64_t k = cb.schedule.k();
  out.write(reinterpret_cast<const char*>(&cb.m), sizeof(cb.m));
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  out.write(reinterpret_cast<const char*>(cb.schedule.times.data()),
            static_cast<std::streamsize>(sizeof(std::int64_t) * cb.schedule.times.size()));
  out.write(reinterpret_cast<const char*>(&cb.snr), sizeof(cb.snr));
  out.write(reinterpret_cast<const char*>(&cb.seed), sizeof(cb.seed));
  out.write(reinterpret_cast<const char*>(cb.samples.data()),
            static_cast<std::streamsize>(sizeof(double) * cb.samples.size()));
  if (!out) throw ValidationError("save_codebook: write failed for " + path);
}

inline Codebook load_codebook(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("load_codebook: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kCodebookMagic, sizeof(magic)) != 0) {
    throw ValidationError("load_codebook: bad magic in " + path);
  }
  Codebook cb;
  std::int64_t k = 0;
  in.read(reinterpret_cast<char*>(&cb.m), sizeof(cb.m));
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  if (!in || cb.m < 1 || k < 1 || k > 1 << 20) throw ValidationError("load_codebook: corrupt header");
  cb.schedule.times.resize(static_cast<std::size_t>(k));
  in.read(reinterpret_cast<char*>(cb.schedule.times.data()),
          static_cast<std::streamsize>(sizeof(std::int64_t) * cb.schedule.times.size()));
  in.read(reinterpret_cast<char*>(&cb.snr), sizeof(cb.snr));
  in.read(reinterpret_cast<char*>(&cb.seed), sizeof(cb.seed));
  cb.schedule.validate();
  cb.samples.resize(static_cast<std::size_t>(cb.m * cb.schedule.horizon()));
  in.read(reinterpret_cast<char*>(cb.samples.data()),
          static_cast<std::streamsize>(sizeof(double) * cb.samples.size()));
  if (!in) throw ValidationError("load_codebook: truncated file " + path);
  return cb;
}

}  // namespace vlsf
