#include "ngrad/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>

namespace ngrad {

namespace {
int g_max_threads = 0;  // 0: use hardware concurrency
}

int max_threads() {
  if (g_max_threads > 0) return g_max_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_max_threads(int n) { g_max_threads = n; }

void for_batches(int n_batches, const std::function<void(int)>& fn) {
  const int workers = std::min(max_threads(), n_batches);
  if (workers <= 1) {
    for (int b = 0; b < n_batches; ++b) fn(b);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const int b = next.fetch_add(1);
      if (b >= n_batches) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ngrad
