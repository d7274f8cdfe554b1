#ifndef DIVAFN_PARALLEL_HPP
#define DIVAFN_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace divafn {

/// Maximum worker count: DVFN_THREADS when set (clamped to >= 1), otherwise
/// the hardware concurrency.
std::size_t thread_budget();

/// Runs fn(0) .. fn(count-1) on up to thread_budget() workers with a static
/// task split. Each task must write only its own outputs, so the result is
/// independent of the worker count.
void run_tasks(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace divafn

#endif  // DIVAFN_PARALLEL_HPP
