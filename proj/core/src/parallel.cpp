#include "aberray/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aberray {

Executor::Executor(int threads) : threads_(std::max(1, threads)) {}

const Executor& Executor::serial() {
  static const Executor kSerial(1);
  return kSerial;
}

void Executor::parallel_for(std::size_t n,
                            const std::function<void(std::size_t, std::size_t)>& body) const {
  if (n == 0) return;
  if (threads_ == 1 || n == 1) {
    body(0, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(n, static_cast<std::size_t>(threads_) * 8);
  const std::size_t chunk = (n + chunks - 1) / chunks;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      const std::size_t begin = c * chunk;
      if (begin >= n) return;
      try {
        body(begin, std::min(n, begin + chunk));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  std::vector<std::jthread> pool;
  const int spawn = static_cast<int>(std::min<std::size_t>(threads_, chunks)) - 1;
  pool.reserve(spawn);
  for (int i = 0; i < spawn; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace aberray
