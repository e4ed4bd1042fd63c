#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mmsim {

/// Process-wide worker count used by the per-cell loops (default 1).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs fn(i) for i in [0, n) over contiguous static chunks.
///
/// Every index is processed by exactly one worker and the work for one index
/// never depends on the partition, so results are bit-identical for any
/// thread count as long as fn writes only to slots owned by i. The first
/// exception (by chunk order) is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn)
{
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&fn, &errors, n, chunk](std::size_t w) {
        try {
            for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i)
                fn(i);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers && w * chunk < n; ++w)
        pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace mmsim
