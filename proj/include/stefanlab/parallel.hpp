#pragma once

#include <functional>

namespace stefanlab {

/// Worker count: min(hardware concurrency, STEFANLAB_THREADS when set).
int worker_count();

/// Runs fn(begin, end) over a fixed partition of [0, n) into chunks. The
/// partition depends only on n and the worker count, and callers reduce
/// per-chunk results in chunk order, so results are deterministic.
void parallel_chunks(int n, const std::function<void(int chunk, int begin, int end)>& fn);

int chunk_count(int n);

}  // namespace stefanlab
