#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace covtest {

struct TaskFailure {
  std::size_t index = 0;
  std::exception_ptr error;
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Returns the
/// failure with the lowest index, independent of scheduling.
template <typename Fn>
std::optional<TaskFailure> parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_failure{count};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      // Indices above a known failure are skipped; lower ones still run so
      // the reported failure is the lowest index.
      if (i > first_failure.load(std::memory_order_acquire)) continue;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < first_failure.load()) {
          first_failure.store(i, std::memory_order_release);
          failure = std::current_exception();
        }
      }
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (!failure) return std::nullopt;
  return TaskFailure{first_failure.load(), failure};
}

}  // namespace covtest
