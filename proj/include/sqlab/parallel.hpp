#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sqlab {

/// Runs fn(block, worker) for every block in [0, n_blocks) on up to `workers`
/// threads. Blocks are claimed dynamically, so callers that need a
/// worker-count-independent result must store per-block outputs and reduce
/// them in block order afterwards. The first exception thrown by any block is
/// rethrown on the calling thread.
template <class Fn>
void for_each_block(std::size_t n_blocks, unsigned workers, Fn&& fn) {
    if (n_blocks == 0) return;
    const unsigned n_threads =
        static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n_blocks));
    if (n_threads == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b, 0u);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&](unsigned worker) {
        for (;;) {
            const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
            if (b >= n_blocks) return;
            try {
                fn(b, worker);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n_blocks, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(n_threads - 1);
    for (unsigned w = 1; w < n_threads; ++w) pool.emplace_back(body, w);
    body(0);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

/// Evaluates fn(block) for every block and returns the results in block order.
template <class T, class Fn>
std::vector<T> map_blocks(std::size_t n_blocks, unsigned workers, Fn&& fn) {
    std::vector<T> out(n_blocks);
    for_each_block(n_blocks, workers, [&](std::size_t b, unsigned) { out[b] = fn(b); });
    return out;
}

}  // namespace sqlab
