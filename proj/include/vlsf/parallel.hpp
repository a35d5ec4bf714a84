#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace vlsf {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc != 0 ? hc : 1;
}

/// Deterministic chunked map-reduce over the index range [0, n).
///
/// The range is split into fixed-size chunks; `map_chunk(begin, end)` produces one
/// accumulator per chunk and `fold(acc, part)` combines them in chunk order. Because
/// chunk boundaries and fold order never depend on the thread count, the result is
/// bitwise identical for any `threads` value.
template <typename Acc, typename MapFn, typename FoldFn>
Acc chunked_reduce(std::int64_t n, std::int64_t chunk, unsigned threads, MapFn map_chunk,
                   FoldFn fold, Acc acc) {
  if (n <= 0) return acc;
  chunk = std::max<std::int64_t>(1, chunk);
  const std::int64_t nchunks = (n + chunk - 1) / chunk;
  std::vector<Acc> parts(static_cast<std::size_t>(nchunks));

  const unsigned want = resolve_threads(threads);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::int64_t>(static_cast<std::int64_t>(want), nchunks));

  auto run_chunk = [&](std::int64_t ci) {
    const std::int64_t b = ci * chunk;
    const std::int64_t e = std::min(n, b + chunk);
    parts[static_cast<std::size_t>(ci)] = map_chunk(b, e);
  };

  if (workers <= 1) {
    for (std::int64_t ci = 0; ci < nchunks; ++ci) run_chunk(ci);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::int64_t ci = next.fetch_add(1);
          if (ci >= nchunks) return;
          run_chunk(ci);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (auto& p : parts) acc = fold(std::move(acc), p);
  return acc;
}

inline constexpr std::int64_t kDefaultChunk = 1 << 14;

}  // namespace vlsf
