#pragma once

#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace periodica {

namespace detail {
inline int& thread_override() {
  static int v = 0;
  return v;
}
}  // namespace detail

// Worker count used by all parallel loops. Unset = PERIODICA_THREADS
// environment variable, falling back to the hardware count.
inline void set_threads(int n) { detail::thread_override() = n < 0 ? 0 : n; }

inline int effective_threads() {
  int v = detail::thread_override();
  if (v > 0) return v;
  if (const char* env = std::getenv("PERIODICA_THREADS")) {
    int e = std::atoi(env);
    if (e > 0) return e;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

// Static round-robin split of [0, ntasks) over the worker threads.
// f(task) must only touch per-task or per-thread state; callers merge
// results in task order so runs are reproducible.
template <class F>
void parallel_for(std::int64_t ntasks, F&& f) {
  int nt = effective_threads();
  if (nt <= 1 || ntasks <= 1) {
    for (std::int64_t t = 0; t < ntasks; ++t) f(t);
    return;
  }
  if (std::int64_t(nt) > ntasks) nt = int(ntasks);
  std::vector<std::thread> pool;
  pool.reserve(size_t(nt));
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      for (std::int64_t t = w; t < ntasks; t += nt) f(t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace periodica
