#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace cne {

// Worker-thread cap shared by the whole engine. 1 means strictly serial.
int thread_count();
void set_thread_count(int n);

// Runs fn(block_begin, block_end) over [0, n) in fixed-size blocks.
// Blocks are independent, so the result is identical for any thread count
// as long as fn only writes to block-local state.
template <typename Fn>
void parallel_blocks(std::size_t n, std::size_t block, Fn&& fn) {
    const std::size_t nblocks = (n + block - 1) / block;
    const int workers = std::min<int>(thread_count(), static_cast<int>(nblocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b)
            fn(b * block, std::min(n, (b + 1) * block));
        return;
    }
    std::atomic<std::size_t> counter{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&fn, &counter, n, block, nblocks] {
            for (;;) {
                const std::size_t b = counter.fetch_add(1);
                if (b >= nblocks) break;
                fn(b * block, std::min(n, (b + 1) * block));
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cne
