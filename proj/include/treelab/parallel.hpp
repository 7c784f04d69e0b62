#pragma once

// Replica scheduling. Replicas are claimed from a shared counter by a fixed
// pool of workers and their results land in a buffer indexed by replica, so
// the reduction order (and every output byte) is independent of the thread
// count and of arrival order.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace treelab {

struct Execution {
  std::uint64_t seed = 20180911;
  unsigned threads = 1;
};

// Cooperative interrupt flag (set from a signal handler by the CLI).
void request_interrupt() noexcept;
void clear_interrupt() noexcept;
bool interrupt_requested() noexcept;

// Runs body(state, replica) for replica in [first, first + count) and returns
// the results in replica order. `make_state()` builds per-worker scratch.
// After an interrupt the longest fully completed prefix is returned.
template <class T, class MakeState, class Body>
std::vector<T> run_replicas(std::size_t first, std::size_t count, unsigned threads, MakeState make_state, Body body) {
  std::vector<T> results(count);
  std::vector<std::uint8_t> done(count, 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  constexpr std::size_t kChunk = 16;

  auto worker = [&] {
    try {
      auto state = make_state();
      for (;;) {
        if (interrupt_requested()) return;
        const std::size_t begin = next.fetch_add(kChunk, std::memory_order_relaxed);
        if (begin >= count) return;
        const std::size_t end = std::min(count, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) {
          results[i] = body(state, first + i);
          done[i] = 1;
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(count);
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, count))));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  const auto prefix = static_cast<std::size_t>(std::find(done.begin(), done.end(), 0) - done.begin());
  results.resize(prefix);
  return results;
}

}  // namespace treelab
