#pragma once

#include <cstddef>
#include <functional>

namespace aberray {

/// Parallel-map capability handed to the library by the caller. Work is
/// split into index ranges; callers write results to disjoint slots so the
/// output never depends on the thread count.
class Executor {
 public:
  explicit Executor(int threads = 1);

  int threads() const { return threads_; }

  /// Calls body(begin, end) over a partition of [0, n).
  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) const;

  static const Executor& serial();

 private:
  int threads_;
};

}  // namespace aberray
