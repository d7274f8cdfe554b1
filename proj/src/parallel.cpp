#include "divafn/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace divafn {

std::size_t thread_budget() {
  if (const char* env = std::getenv("DVFN_THREADS")) {
    const long value = std::strtol(env, nullptr, 10);
    if (value >= 1) return static_cast<std::size_t>(value);
    return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void run_tasks(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(thread_budget(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace divafn
