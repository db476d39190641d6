#ifndef L2R_PARALLEL_HPP_
#define L2R_PARALLEL_HPP_

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace l2r {

// Runs fn(i) for i in [0, count). With num_threads <= 1 it is a plain
// loop. Callers that need reproducible floating-point results must write
// per-index outputs into preallocated slots and reduce them afterwards in
// index order; the scheduling here only decides who computes what.
inline void parallel_for(int count, int num_threads,
                         const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (num_threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = std::min(num_threads, count);
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace l2r

#endif  // L2R_PARALLEL_HPP_
