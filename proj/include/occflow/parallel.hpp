#ifndef OCCFLOW_PARALLEL_HPP
#define OCCFLOW_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace occflow {

// Process-wide worker cap. 1 (the default) runs everything inline.
void set_max_threads(int n);
int max_threads();

// Number of chunks parallel_chunks will split [0, n) into.
std::size_t plan_chunks(std::size_t n);

// Runs fn(begin, end) over disjoint chunks of [0, n). Chunk boundaries
// depend only on n and the thread cap, and callers must write disjoint
// outputs per index, so results never depend on scheduling.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& fn);

// Variant passing the chunk index (0 <= chunk < plan_chunks(n)) so callers
// can keep per-chunk accumulators and merge them in chunk order.
void parallel_chunks_indexed(
    std::size_t n,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace occflow

#endif  // OCCFLOW_PARALLEL_HPP
