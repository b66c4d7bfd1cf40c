#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace regselect {

/// Number of workers used by parallel_for; 0 means hardware concurrency.
inline std::size_t& worker_count()
{
    static std::size_t n = 0;
    return n;
}

/*
 * Calls fn(i) for i in [0, count) on a pool of threads, each index exactly
 * once. Callers write results by index, so output does not depend on the
 * schedule. The first exception thrown by any call is rethrown.
 */
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn)
{
    std::size_t workers = worker_count();
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace regselect
