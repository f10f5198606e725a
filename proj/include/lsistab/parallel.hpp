#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace lsistab {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) over contiguous blocks. Callers write results
/// into slot i only, so output never depends on scheduling.
template <class Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  const int workers = static_cast<int>(std::min<long>(resolve_threads(threads), std::max<long>(count, 1)));
  if (workers <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const long block = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long begin = w * block;
    const long end = std::min(count, begin + block);
    pool.emplace_back([&, w, begin, end] {
      try {
        for (long i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace lsistab
