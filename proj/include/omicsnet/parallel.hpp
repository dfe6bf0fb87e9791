#ifndef OMICSNET_PARALLEL_HPP
#define OMICSNET_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace omicsnet {

/// Process-wide cap on worker threads (default 1). Results never depend on it.
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker;
/// callers write results into per-index slots and reduce afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace omicsnet

#endif
