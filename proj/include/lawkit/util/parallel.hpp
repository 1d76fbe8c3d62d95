#pragma once

#include <cstddef>
#include <functional>

namespace lawkit::util {

/// Runs fn(0..n-1) on up to `threads` workers. Each index runs exactly once;
/// the first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lawkit::util
