#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace vpl {

/// Worker count used by data-parallel loops. Read once from VPL_NUM_THREADS
/// (default 1); may be overridden programmatically.
int thread_count();
void set_thread_count(int count);

/// Runs body(index, worker) for index in [0, count). Indices are split into
/// contiguous static blocks, so each index always sees the same arithmetic
/// regardless of how many workers run. `worker` is in [0, thread_count()).
void parallel_for(std::size_t count, const std::function<void(std::size_t, int)>& body);

/// Fixed-order pairwise summation. The result depends only on the input
/// values and their order, never on the thread count.
double pairwise_sum(std::span<const double> values);

/// Lazily constructed per-worker scratch objects.
template <class T>
class PerWorker {
 public:
  explicit PerWorker(std::function<std::unique_ptr<T>()> make) : make_(std::move(make)) {}

  T& get(int worker) {
    std::lock_guard lock(mutex_);
    if (static_cast<std::size_t>(worker) >= items_.size()) items_.resize(worker + 1);
    auto& slot = items_[worker];
    if (!slot) slot = make_();
    return *slot;
  }

 private:
  std::function<std::unique_ptr<T>()> make_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<T>> items_;
};

}  // namespace vpl
