#pragma once

#include <cstddef>
#include <functional>

namespace tio::util {

/**
 * Runs job(i) for i in [0, n) on up to thread_cap() threads. Jobs must not
 * share mutable state. The first exception (lowest index) is rethrown after
 * all jobs finish.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job);

}  // namespace tio::util
