#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>

namespace colmat {

// Runtime switch between the OpenMP driver and the serial reference driver.
// Both run the same chunk kernels; per-chunk outputs are combined in chunk
// order, so for a fixed chunk count the two drivers agree bitwise.
void set_parallel_enabled(bool enabled);
bool parallel_enabled();

// Pure function of the workload size (never of the thread count), so the
// chunking — and therefore the result — is machine-independent.
inline std::size_t default_chunk_count(std::size_t items) {
    if (items == 0) return 1;
    return std::min<std::size_t>(64, items);
}

struct ChunkRange {
    std::size_t begin;
    std::size_t end;
};

// Contiguous near-equal split; chunks partition [0, items) exactly.
inline ChunkRange chunk_range(std::size_t items, std::size_t chunks, std::size_t idx) {
    std::size_t base = items / chunks;
    std::size_t extra = items % chunks;
    std::size_t begin = idx * base + std::min(idx, extra);
    std::size_t len = base + (idx < extra ? 1 : 0);
    return {begin, begin + len};
}

template <typename Fn>
void for_each_chunk(std::size_t chunks, Fn&& fn) {
    if (parallel_enabled()) {
        // Exceptions must not unwind out of the omp region; the first one is
        // stashed and rethrown on the calling thread.
        std::exception_ptr error;
        std::mutex error_mutex;
#pragma omp parallel for schedule(static)
        for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
            try {
                fn(static_cast<std::size_t>(c));
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    } else {
        for (std::size_t c = 0; c < chunks; ++c) fn(c);
    }
}

} // namespace colmat
