#include "mosaic/thread_pool.hpp"

namespace mosaic {

void run_jobs(const std::vector<std::function<void()>>& jobs, int workers) {
  parallel_for(0, static_cast<Eigen::Index>(jobs.size()), workers,
               [&](Eigen::Index i) { jobs[i](); });
}

}  // namespace mosaic
