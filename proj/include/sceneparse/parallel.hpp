#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace sceneparse {

/// Worker count, from SCENEPARSE_THREADS. Defaults to 1: every parallel
/// section must produce the same bytes at any thread count, and the safe
/// default makes single-threaded runs the reference.
inline int thread_count() {
    const char* env = std::getenv("SCENEPARSE_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return n < 1 ? 1 : n;
}

/// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
/// no reductions happen here, so the float stream is order-independent.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    int workers = thread_count();
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (static_cast<std::size_t>(workers) > n) workers = static_cast<int>(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace sceneparse
