#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace swn {

// Splits [0, n) into nthreads contiguous chunks and runs fn(begin, end) on each.
// nthreads <= 1 runs inline. Chunk boundaries depend only on (n, nthreads), so
// reductions that sum per-chunk partials in chunk order are reproducible for a
// fixed thread count.
inline void parallel_for(int n, int nthreads, const std::function<void(int, int)>& fn) {
  if (n <= 0) return;
  if (nthreads <= 1 || n < 2 * nthreads) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  int chunk = (n + nthreads - 1) / nthreads;
  for (int t = 0; t < nthreads; ++t) {
    int b = t * chunk;
    int e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back(fn, b, e);
  }
  for (auto& th : pool) th.join();
}

inline double parallel_sum(int n, int nthreads, const std::function<double(int, int)>& fn) {
  if (n <= 0) return 0.0;
  if (nthreads <= 1 || n < 2 * nthreads) return fn(0, n);
  int chunk = (n + nthreads - 1) / nthreads;
  int used = (n + chunk - 1) / chunk;
  std::vector<double> partial(used, 0.0);
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (int t = 0; t < used; ++t) {
    int b = t * chunk;
    int e = std::min(n, b + chunk);
    pool.emplace_back([&partial, &fn, t, b, e] { partial[t] = fn(b, e); });
  }
  for (auto& th : pool) th.join();
  double s = 0.0;
  for (double p : partial) s += p;  // fixed chunk order
  return s;
}

}  // namespace swn
