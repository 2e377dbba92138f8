#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace orchard {

// Runs fn(0) .. fn(count-1) on up to `threads` workers. Iterations must be
// independent; results should go to preallocated slots so the outcome does
// not depend on scheduling. The first exception wins and is rethrown after
// all workers stop.
template <class Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  if (count <= 0) return;
  const long nt = std::min<long>(std::max(1, threads), count);
  if (nt == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto work = [&] {
    while (true) {
      const long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nt));
  for (long t = 0; t < nt; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace orchard
