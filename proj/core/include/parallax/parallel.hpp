#pragma once

#include "tensor.hpp"

#include <functional>

namespace parallax {

// Worker count: hardware concurrency, capped by PARALLAX_THREADS, forced to 1
// in deterministic mode.
int thread_count();
void set_deterministic(bool on);
bool deterministic();

/*
 * Runs fn(i) for i in [0, n) over a static partition. Callers must only write
 * to per-index outputs so results do not depend on the schedule.
 */
void parallel_for(Index n, std::function<void(Index)> const &fn);

} // namespace parallax
