#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace loctail {

// Worker cap: LOCTAIL_THREADS if set, else hardware concurrency.
inline int worker_count() {
    if (const char* env = std::getenv("LOCTAIL_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Run fn(chunk_index, begin, end) over [0,total) split into fixed-size chunks.
// Chunk boundaries are independent of the worker count, so any per-chunk
// results the caller merges in chunk order are bit-identical regardless of
// scheduling.
template <class Fn>
void parallel_chunks(std::size_t total, std::size_t chunk_size, Fn&& fn) {
    if (total == 0) return;
    std::size_t nchunks = (total + chunk_size - 1) / chunk_size;
    int workers = std::min<std::size_t>(worker_count(), nchunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c)
            fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= nchunks || failed.load()) return;
            try {
                fn(c, c * chunk_size, std::min(total, (c + 1) * chunk_size));
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace loctail
