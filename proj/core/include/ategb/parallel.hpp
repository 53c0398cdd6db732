#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace ategb {

// Worker count: hardware concurrency, capped by ATEGB_THREADS when set.
unsigned worker_count();

// Runs fn(i) for i in [0, n). Work is split by index so results never
// depend on how many workers run.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Counter-based stream seed for block `index` of a run seeded by `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace ategb
