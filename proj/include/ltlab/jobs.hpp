#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ltlab {

inline int effective_workers(int workers) {
  if (workers > 0) return workers;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs job(i) for i = 0 .. count-1 across `workers` threads (0 = all cores).
// Jobs must write only into their own per-index slots; with that discipline
// results are identical for any worker count.
template <class Fn>
void parallel_for(long count, int workers, Fn&& job) {
  workers = effective_workers(workers);
  if (workers <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto body = [&]() {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ltlab
