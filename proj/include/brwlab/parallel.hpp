#ifndef BRWLAB_PARALLEL_HPP
#define BRWLAB_PARALLEL_HPP

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace brwlab {

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Replicate-parallel map-reduce. Items are split into fixed-size chunks;
// each chunk is accumulated serially in item order and the chunk partials
// are merged in chunk order afterwards. Output is therefore identical for
// every thread count, including the serial path (threads <= 1), which is
// the reference implementation the tests compare against.
//
// kernel:  void(std::int64_t item, Acc& acc)
// merge:   void(Acc& into, const Acc& from)
template <class Acc, class Kernel, class Merge>
Acc chunked_reduce(std::int64_t n_items, int threads, Acc init, Kernel&& kernel,
                   Merge&& merge, std::int64_t chunk_size = 4096) {
    if (n_items <= 0) return init;
    if (chunk_size <= 0) chunk_size = 4096;
    const std::int64_t n_chunks = (n_items + chunk_size - 1) / chunk_size;

    if (threads <= 1 || n_chunks == 1) {
        // serial reference path
        Acc acc = init;
        std::vector<Acc> partials(static_cast<std::size_t>(n_chunks), init);
        for (std::int64_t c = 0; c < n_chunks; ++c) {
            const std::int64_t lo = c * chunk_size;
            const std::int64_t hi = std::min(n_items, lo + chunk_size);
            for (std::int64_t i = lo; i < hi; ++i) kernel(i, partials[static_cast<std::size_t>(c)]);
        }
        for (const Acc& p : partials) merge(acc, p);
        return acc;
    }

    std::vector<Acc> partials(static_cast<std::size_t>(n_chunks), init);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        const std::int64_t lo = c * chunk_size;
        const std::int64_t hi = std::min(n_items, lo + chunk_size);
        for (std::int64_t i = lo; i < hi; ++i) kernel(i, partials[static_cast<std::size_t>(c)]);
    }
    Acc acc = init;
    for (const Acc& p : partials) merge(acc, p);
    return acc;
}

// Independent per-item work writing into caller-owned slots.
template <class Kernel>
void parallel_for_items(std::int64_t n_items, int threads, Kernel&& kernel) {
#ifdef _OPENMP
    if (threads > 1) {
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
        for (std::int64_t i = 0; i < n_items; ++i) kernel(i);
        return;
    }
#endif
    for (std::int64_t i = 0; i < n_items; ++i) kernel(i);
}

} // namespace brwlab

#endif
