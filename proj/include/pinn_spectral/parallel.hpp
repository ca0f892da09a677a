#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pinn_spectral {

/// Worker count: PINN_SPECTRAL_THREADS if set and positive, else hardware concurrency.
inline unsigned thread_budget() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PINN_SPECTRAL_THREADS")) {
        try {
            long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(std::min<long>(v, hw));
        } catch (...) {
        }
    }
    return hw;
}

/// Runs body(i) for i in [begin, end) in contiguous static chunks. Each index is
/// visited exactly once, so any body writing only to slot i is schedule-independent.
template <typename Body>
void parallel_for(long begin, long end, Body&& body) {
    const long n = end - begin;
    if (n <= 0) return;
    const long workers = std::min<long>(thread_budget(), std::max(1L, n / 16));
    if (workers <= 1) {
        for (long i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const long chunk = (n + workers - 1) / workers;
    for (long w = 0; w < workers; ++w) {
        const long lo = begin + w * chunk;
        const long hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body, &failure, &failure_mutex] {
            try {
                for (long i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace pinn_spectral
