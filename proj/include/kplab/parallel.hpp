#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace kplab::parallel {

inline std::atomic<unsigned> &thread_count_storage() {
    static std::atomic<unsigned> count{1};
    return count;
}

inline void set_thread_count(unsigned n) { thread_count_storage() = std::max(1u, n); }
inline unsigned thread_count() { return thread_count_storage(); }

// Calls body(i) for i in [0, n). Work is split into contiguous blocks; each index
// is visited exactly once, so callers that write per-index results and reduce
// them afterwards in index order get schedule-independent output.
template <class Body>
void for_each_index(std::size_t n, Body &&body) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n * w / workers, end = n * (w + 1) / workers;
        pool.emplace_back([&body, begin, end] {
            for (std::size_t i = begin; i < end; ++i) body(i);
        });
    }
}

} // namespace kplab::parallel
