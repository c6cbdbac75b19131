#pragma once

#include <functional>

namespace irbridge {

/// Runs body(chunk) for chunk = 0..n_chunks-1 on up to n_threads workers.
///
/// The chunk count is part of the algorithm, not the machine: callers fix it
/// independently of n_threads and merge per-chunk results in chunk order, so
/// output is bit-identical for any worker count. n_threads <= 1 runs inline;
/// n_threads == 0 uses the hardware concurrency.
void for_chunks(int n_chunks, int n_threads, const std::function<void(int)>& body);

/// Effective worker count for a requested value (0 -> hardware concurrency).
int resolve_threads(int requested);

}  // namespace irbridge
