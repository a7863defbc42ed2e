#pragma once
// Bounded parallel helpers. Thread count is capped by LANESEQ_THREADS.
// Work is only split across independent output ranges, so results are
// bit-identical at any thread count.

#include <cstddef>
#include <functional>

namespace laneseq {

// Max worker threads: LANESEQ_THREADS if set (>=1), else hardware concurrency.
int thread_budget();

// Runs body(begin, end) over [0,n) in contiguous chunks, possibly on several
// threads. Nested calls run serially. body must not touch shared mutable
// state across chunks.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body);

}  // namespace laneseq
