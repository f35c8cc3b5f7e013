#pragma once

#include <cstddef>
#include <functional>

namespace bmi {

/// Number of worker threads used by parallelFor. Zero selects
/// std::thread::hardware_concurrency().
void setThreadCount(unsigned count);
unsigned threadCount();

/// Runs body(i) for every i in [0, count). Iterations are claimed
/// dynamically, so body must only write to state owned by index i.
/// Exceptions from any iteration are rethrown on the calling thread.
void parallelFor(std::size_t count, const std::function<void(std::size_t)> &body);

} // namespace bmi
