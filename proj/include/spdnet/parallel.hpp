#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace spdnet {

inline int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
// interleaved schedule. If any call throws, the exception of the lowest
// failing index is rethrown after all workers finish.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (n <= 0) return;
  const int workers = std::clamp(threads, 1, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto run = [&](int tid) {
    for (int i = tid; i < n; i += workers) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(run, t);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace spdnet
