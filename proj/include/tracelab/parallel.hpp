#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tracelab {

// Runs fn(block_index) for every block in [0, num_blocks) on up to `threads`
// workers. The block decomposition is fixed by the caller and independent of
// the thread count; callers must write per-block results into preallocated
// slots and reduce them in block order afterwards, which keeps floating-point
// reductions bit-identical for any thread count.
template <typename Fn>
void parallel_blocks(std::size_t num_blocks, int threads, Fn&& fn) {
  if (num_blocks == 0) return;
  std::size_t workers = threads < 1 ? 1 : static_cast<std::size_t>(threads);
  if (workers > num_blocks) workers = num_blocks;

  if (workers == 1) {
    for (std::size_t b = 0; b < num_blocks; ++b) fn(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= num_blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace tracelab
