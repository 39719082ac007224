#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ipmlab {

// Worker count: IPMLAB_THREADS if set (min 1), else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("IPMLAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

// Runs fn(i) for i in [0, n).  Each index must only touch its own slot of
// any shared output so results do not depend on the worker count; callers
// reduce over the slots in index order afterwards.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ipmlab
