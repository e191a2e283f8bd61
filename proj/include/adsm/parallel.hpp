#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace adsm::parallel {

inline unsigned default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1u : n;
}

/// Run fn(chunk_begin, chunk_end, chunk_index) over [0, n) split into
/// fixed-size chunks. Chunk boundaries depend only on n and chunk_size,
/// never on the worker count, so callers that merge per-chunk partial
/// results in chunk order get bit-identical sums for any --workers value.
template <typename Fn>
void for_chunks(std::size_t n, std::size_t chunk_size, unsigned workers, Fn&& fn) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::size_t nchunks = (n + chunk_size - 1) / chunk_size;

  auto run_chunk = [&](std::size_t ci) {
    const std::size_t begin = ci * chunk_size;
    const std::size_t end = begin + chunk_size < n ? begin + chunk_size : n;
    fn(begin, end, ci);
  };

  if (workers <= 1 || nchunks == 1) {
    for (std::size_t ci = 0; ci < nchunks; ++ci) run_chunk(ci);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t ci = next.fetch_add(1, std::memory_order_relaxed);
      if (ci >= nchunks || failed.load(std::memory_order_relaxed)) return;
      try {
        run_chunk(ci);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  const unsigned nthreads = workers < nchunks ? workers : static_cast<unsigned>(nchunks);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Element-wise parallel map: fn(i) for i in [0, n). fn must only write
/// to its own slot of any shared output.
template <typename Fn>
void for_each_index(std::size_t n, unsigned workers, Fn&& fn) {
  for_chunks(n, 1, workers, [&](std::size_t begin, std::size_t, std::size_t) { fn(begin); });
}

}  // namespace adsm::parallel
