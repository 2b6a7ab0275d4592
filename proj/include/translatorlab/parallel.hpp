#ifndef TRANSLATORLAB_PARALLEL_HPP
#define TRANSLATORLAB_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace tlab {

// Worker count: min(hardware, TRANSLATOR_LAB_THREADS). At most one thread
// team exists at a time; reductions stay in deterministic index order.
int worker_count();

// Runs fn(begin..end) over disjoint chunks. Falls back to a plain loop for
// small ranges or a single worker. fn must only write to per-index slots.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& chunk_fn);

}  // namespace tlab

#endif
