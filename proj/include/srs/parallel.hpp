#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace srs {

/// Global worker budget for data-parallel loops (CLI --threads).
inline int& max_threads()
{
    static int n = (int)std::max(1u, std::thread::hardware_concurrency());
    return n;
}

/// Run f(begin, end) over fixed-size chunks of [0, n). Chunk boundaries
/// depend only on n, and chunks write disjoint ranges, so results are
/// identical for any thread count.
template <typename F>
void parallel_for(std::size_t n, F&& f)
{
    if (n == 0)
        return;
    const int workers = std::max(1, std::min<int>(max_threads(), (int)n));
    if (workers == 1) {
        f(std::size_t(0), n);
        return;
    }
    const std::size_t nchunks = std::min<std::size_t>(n, 8 * (std::size_t)workers);
    const std::size_t chunk = (n + nchunks - 1) / nchunks;
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t c = cursor.fetch_add(1);
            const std::size_t lo = c * chunk;
            if (lo >= n)
                return;
            f(lo, std::min(n, lo + chunk));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
}

} // namespace srs
