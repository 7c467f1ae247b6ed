#ifndef UCOST_PARALLEL_HPP
#define UCOST_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ucost {

/// Thread cap taken from the UNIMODAL_COST_THREADS environment variable.
/// 0 or unset means one thread per hardware core.
inline int thread_cap() {
    static const int cap = [] {
        long v = 0;
        if (const char* env = std::getenv("UNIMODAL_COST_THREADS")) {
            v = std::strtol(env, nullptr, 10);
        }
        if (v <= 0) {
            v = static_cast<long>(std::thread::hardware_concurrency());
        }
        return static_cast<int>(std::max(1L, v));
    }();
    return cap;
}

// Runs fn(begin, end) over disjoint contiguous chunks of [0, count).
// Chunk boundaries depend only on count and the thread cap, and every
// element is visited exactly once, so per-element writes land at the same
// place regardless of scheduling. Cross-chunk reductions are the caller's
// job and must stay sequential.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, std::size_t grain = 2048) {
    std::size_t threads = static_cast<std::size_t>(thread_cap());
    if (grain > 0) {
        threads = std::min(threads, std::max<std::size_t>(1, count / grain));
    }
    if (threads <= 1 || count == 0) {
        fn(std::size_t{0}, count);
        return;
    }
    const std::size_t chunk = (count + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace ucost

#endif  // UCOST_PARALLEL_HPP
