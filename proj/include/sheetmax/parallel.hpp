#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sheetmax {

inline unsigned resolve_workers(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `body(worker, begin, end)` over [0, count) in fixed-size chunks on
/// `workers` threads. Callers write results by index, so the outcome does not
/// depend on which worker handled which chunk. The first exception thrown by
/// any worker is rethrown on the calling thread.
template <typename Body>
void parallel_chunks(std::size_t count, unsigned workers, std::size_t chunk, Body&& body) {
    workers = resolve_workers(workers);
    chunk = std::max<std::size_t>(1, chunk);
    if (workers == 1 || count <= chunk) {
        for (std::size_t b = 0; b < count; b += chunk) body(0u, b, std::min(count, b + chunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&](unsigned worker) {
        try {
            for (;;) {
                const std::size_t b = next.fetch_add(chunk);
                if (b >= count) return;
                body(worker, b, std::min(count, b + chunk));
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(count);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace sheetmax
