#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mixhp {

inline int hardware_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// requested > 0 wins; otherwise the MIXHP_WORKERS environment variable;
// otherwise all hardware threads.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MIXHP_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return hardware_workers();
}

// Runs fn(0) .. fn(n_jobs-1), each exactly once. Results must be written to
// per-job slots so the outcome does not depend on scheduling. The first
// failing job (lowest index) has its exception rethrown after all workers
// join.
inline void parallel_for(int n_jobs, int n_workers,
                         const std::function<void(int)>& fn) {
  if (n_jobs <= 0) return;
  n_workers = std::max(1, std::min(n_workers, n_jobs));
  if (n_workers == 1) {
    for (int i = 0; i < n_jobs; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_jobs));
  std::atomic<int> next{0};
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_jobs) return;
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mixhp
