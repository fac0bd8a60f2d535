#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace nqdyn {

// Static-chunk parallel loop over [begin, end).  Chunk boundaries depend only
// on (begin, end, threads) and every index is processed by exactly one worker
// with no shared accumulators, so results are identical for any thread count.
inline void parallel_for(long begin, long end, int threads,
                         const std::function<void(long)>& body) {
  long n = end - begin;
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (long i = begin; i < end; ++i) body(i);
    return;
  }
  int nt = static_cast<int>(threads < n ? threads : n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int w = 0; w < nt; ++w) {
    long lo = begin + n * w / nt;
    long hi = begin + n * (w + 1) / nt;
    pool.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace nqdyn
