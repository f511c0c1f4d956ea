#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace oitlab {

// Runs fn(i) for i in [0, n) across hardware threads. Work items must write
// disjoint outputs; scheduling is dynamic but the results are deterministic.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n < 4) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    unsigned workers = std::min(hw, static_cast<unsigned>(n));
    pool.reserve(workers - 1);
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace oitlab
