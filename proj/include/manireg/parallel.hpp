#ifndef MANIREG_PARALLEL_HPP
#define MANIREG_PARALLEL_HPP

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "manireg/mesh.hpp"

namespace manireg {

/// Runs fn(i) for i in [0, n) on up to `threads` workers using contiguous
/// chunks. Each index is visited exactly once, so results written to
/// per-index slots do not depend on the thread count.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  const Index workers = std::min<Index>(threads, n);
  const Index chunk = (n + workers - 1) / workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const Index end = std::min(n, (w + 1) * chunk);
        for (Index i = w * chunk; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace manireg

#endif
