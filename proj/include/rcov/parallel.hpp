#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "rcov/linalg/types.hpp"

namespace rcov {

/// Calls fn(i) for i in [0, n) on up to `threads` workers, each owning a
/// contiguous chunk. The first exception thrown is rethrown on the caller.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
  const Index workers = std::clamp<Index>(threads, 1, std::max<Index>(n, 1));
  if (workers == 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (Index w = 0; w < workers; ++w) {
    const Index begin = n * w / workers, end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (Index i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace rcov
