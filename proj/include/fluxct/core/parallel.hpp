#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace fluxct {

namespace detail {
inline std::atomic<unsigned> g_thread_count{0};
}

// Process-wide worker count. 0 means hardware concurrency.
inline void set_thread_count(unsigned n) { detail::g_thread_count.store(n); }

inline unsigned thread_count() {
    const unsigned n = detail::g_thread_count.load();
    if (n != 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(begin, end) over contiguous chunks of [0, n), one chunk per worker.
// Callers must keep outputs per-index independent (or fold partial results in
// a fixed order) so that results do not depend on the worker count.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    const unsigned workers = thread_count();
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    const std::size_t base = n / chunks, rem = n % chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks - 1);
    std::size_t begin = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t end = begin + base + (c < rem ? 1 : 0);
        if (c + 1 == chunks) {
            fn(begin, end);
        } else {
            pool.emplace_back([&fn, begin, end] { fn(begin, end); });
        }
        begin = end;
    }
    for (auto& t : pool) t.join();
}

// fn(i) for each i in [0, n), parallel over contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_chunks(n, [&fn](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) fn(i);
    });
}

} // namespace fluxct
