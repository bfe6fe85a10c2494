#pragma once

#include <cstddef>
#include <functional>

namespace featlab {

/// Worker count: INCIDENT_FEATLAB_THREADS if set and > 0, otherwise the
/// hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Work is spread over thread_count() workers;
/// calls made from inside a worker run serially. Results must be written to
/// per-index slots so the outcome does not depend on scheduling. The first
/// exception thrown by any body is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace featlab
