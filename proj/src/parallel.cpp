#include "bclust/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace bclust {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = not set yet, use hardware

// Nested parallel sections run sequentially on the caller's thread: the
// outer loop already owns the worker budget, and results must not depend on
// how the nesting is scheduled.
thread_local bool t_inside_parallel = false;

struct NestGuard {
  NestGuard() { t_inside_parallel = true; }
  ~NestGuard() { t_inside_parallel = false; }
};
}  // namespace

int max_threads() {
  int n = g_max_threads.load();
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
  }
  return n;
}

void set_max_threads(int n) { g_max_threads.store(n < 1 ? 1 : n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int threads = std::min<int>(max_threads(), static_cast<int>(n));
  if (threads <= 1 || t_inside_parallel) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      NestGuard guard;
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const int threads = std::min<int>(max_threads(), static_cast<int>(n));
  if (threads <= 1 || t_inside_parallel) {
    if (n > 0) fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      NestGuard guard;
      fn(begin, end);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace bclust
