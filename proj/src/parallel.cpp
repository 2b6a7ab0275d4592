#include "translatorlab/parallel.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace tlab {

int worker_count() {
  static const int cached = [] {
    const unsigned hw = std::thread::hardware_concurrency();
    long n = hw == 0 ? 1 : static_cast<long>(hw);
    if (const char* env = std::getenv("TRANSLATOR_LAB_THREADS")) {
      char* end = nullptr;
      const long cap = std::strtol(env, &end, 10);
      if (end != env && cap >= 1 && cap < n) n = cap;
    }
    return static_cast<int>(n);
  }();
  return cached;
}

void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
  const std::size_t count = end > begin ? end - begin : 0;
  const int workers = worker_count();
  if (workers <= 1 || count < 4096) {
    if (count > 0) chunk_fn(begin, end);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> team;
  team.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    const std::size_t lo = begin + t * chunk;
    if (lo >= end) break;
    const std::size_t hi = std::min(end, lo + chunk);
    team.emplace_back([&chunk_fn, lo, hi] { chunk_fn(lo, hi); });
  }
  for (std::thread& th : team) th.join();
}

}  // namespace tlab
