#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace steinq {

/// Worker count: STEINQ_THREADS if set, else hardware concurrency.
/// Thread count never affects results; work items are indexed and every
/// reduction happens in index order afterwards.
inline unsigned threadCount() {
  if (const char* env = std::getenv("STEINQ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(0..n-1) across the worker pool. The first exception thrown by any
/// work item is rethrown in the caller once all workers have joined.
template <class Fn>
void parallelFor(std::size_t n, Fn&& fn) {
  const unsigned workers = std::min<std::size_t>(threadCount(), n == 0 ? 1 : n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr firstError;
  std::mutex errorLock;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        if (failed.load(std::memory_order_relaxed)) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> guard(errorLock);
          if (!firstError) firstError = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (firstError) std::rethrow_exception(firstError);
}

}  // namespace steinq
