#pragma once

#include <cstddef>
#include <functional>

namespace flatten {

/// Number of worker threads used by data-parallel scans. Defaults to the
/// hardware concurrency; 0 restores the default.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(chunk) for chunk in [0, n_chunks) across the worker pool.
///
/// Work is split into chunks chosen by the caller, never by the thread count,
/// so any per-chunk result (and any reduction done afterwards in chunk order)
/// is bit-identical regardless of how many threads execute it.
void parallel_for_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& fn);

/// Half-open index range of chunk `c` when [0, n) is cut into `n_chunks` pieces.
struct ChunkRange {
  std::size_t begin;
  std::size_t end;
};
ChunkRange chunk_range(std::size_t n, std::size_t n_chunks, std::size_t c);

}  // namespace flatten
