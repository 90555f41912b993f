#ifndef MOSAIC_THREAD_POOL_HPP
#define MOSAIC_THREAD_POOL_HPP

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "mosaic/types.hpp"

namespace mosaic {

// Runs body(i) for i in [begin, end) across `workers` threads. Iterations
// must be independent; the first exception wins and is rethrown.
template <typename Body>
void parallel_for(Eigen::Index begin, Eigen::Index end, int workers,
                  const Body& body) {
  if (end <= begin) return;
  workers = std::max(1, workers);
  if (workers == 1 || end - begin == 1) {
    for (Eigen::Index i = begin; i < end; ++i) body(i);
    return;
  }
  std::atomic<Eigen::Index> next(begin);
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&]() {
    for (;;) {
      Eigen::Index i = next.fetch_add(1);
      if (i >= end) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (int w = 1; w < workers; ++w) threads.emplace_back(run);
  run();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// Executes jobs (already ordered, e.g. longest first) over a fixed pool.
void run_jobs(const std::vector<std::function<void()>>& jobs, int workers);

}  // namespace mosaic

#endif
