#include "occflow/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace occflow {

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int n) {
  g_max_threads.store(std::max(1, n));
}

int max_threads() {
  return g_max_threads.load();
}

std::size_t plan_chunks(std::size_t n) {
  if (n == 0) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
}

void parallel_chunks_indexed(
    std::size_t n,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t workers = plan_chunks(n);
  if (workers == 0) return;
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end, &errors, w] {
      try {
        fn(w, begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  // Rethrow the error from the lowest chunk so failures are deterministic.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  parallel_chunks_indexed(
      n, [&fn](std::size_t, std::size_t begin, std::size_t end) {
        fn(begin, end);
      });
}

}  // namespace occflow
