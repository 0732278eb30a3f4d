#ifndef STEREOFORGE_PARALLEL_HPP
#define STEREOFORGE_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stereoforge {

namespace detail {
inline std::atomic<int>& thread_limit()
{
  static std::atomic<int> limit{0};  // 0 = hardware concurrency
  return limit;
}
} // namespace detail

inline void set_thread_count(int n) { detail::thread_limit() = std::max(0, n); }

inline int thread_count()
{
  int n = detail::thread_limit();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Work is handed out by index, so callers that
/// only write slot i get schedule-independent results. The first exception
/// thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(int n, Fn&& fn)
{
  int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace stereoforge

#endif // STEREOFORGE_PARALLEL_HPP
