#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wscatter::parallel {

/// Samples per work unit. Fixed so that the reduction tree, and therefore
/// every floating-point sum, is independent of the thread count.
inline constexpr std::uint64_t kChunk = 1u << 14;

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Deterministic map-reduce over sample indices [0, n).
///
/// `map(acc, i)` folds sample i into a chunk-local accumulator; chunks are
/// processed in index order within themselves and merged with
/// `merge(total, chunk)` in chunk order after all workers finish.
template <typename Acc, typename Map, typename Merge>
Acc map_reduce(std::uint64_t n, unsigned threads, Map&& map, Merge&& merge) {
  const std::uint64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Acc> partial(n_chunks);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      for (std::uint64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) {
        Acc acc{};
        const std::uint64_t end = std::min(n, (c + 1) * kChunk);
        for (std::uint64_t i = c * kChunk; i < end; ++i) map(acc, i);
        partial[c] = std::move(acc);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n_chunks);
    }
  };

  const unsigned t = std::max(1u, std::min<unsigned>(resolve_threads(threads),
                                                     static_cast<unsigned>(std::max<std::uint64_t>(n_chunks, 1))));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(t);
    for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  Acc total{};
  for (auto& p : partial) merge(total, p);
  return total;
}

}  // namespace wscatter::parallel
