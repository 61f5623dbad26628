#include "tio/util/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "tio/util/config.hpp"

namespace tio::util {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min(n, std::max<std::size_t>(1, thread_cap()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            job(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace tio::util
