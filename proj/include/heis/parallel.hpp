#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace heis {

/// Runs f(i) for i in [0, count) on up to `threads` threads using contiguous
/// static chunks. Callers must not let distinct i race on shared state.
template <class F>
void parallel_for(std::size_t count, int threads, F&& f) {
    const std::size_t nt = std::min<std::size_t>(std::max(threads, 1), count);
    if (nt <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t b = count * t / nt;
        const std::size_t e = count * (t + 1) / nt;
        pool.emplace_back([b, e, &f] {
            for (std::size_t i = b; i < e; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace heis
