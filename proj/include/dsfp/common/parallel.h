#pragma once

#include <cstddef>
#include <functional>

namespace dsfp {

// Global cap on worker threads used by stage-internal parallelism. Defaults to
// the hardware concurrency; the CLI's `--threads` overrides it.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Runs fn(i) for i in [0, n). Work is split into contiguous static chunks, so
// which thread handles which index never affects results as long as fn(i)
// writes only to slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dsfp
