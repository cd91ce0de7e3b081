#pragma once

#include <qdrl/common.hpp>

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qdrl {

/// Runs f(i) for i in [0, count). Work items must be independent; results are
/// collected by index by the caller, so the outcome does not depend on the
/// worker count.
template <typename F>
void parallel_for(Index workers, Index count, F&& f) {
    if (count <= 0) return;
    if (workers <= 1 || count == 1) {
        for (Index i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<Index> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    const Index num_threads = std::min<Index>(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(num_threads));
    for (Index t = 0; t < num_threads; ++t) {
        pool.emplace_back([&]() {
            while (!failed.load(std::memory_order_relaxed)) {
                const Index i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) break;
                try {
                    f(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                }
            }
        });
    }
    for (auto& thread : pool) thread.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace qdrl
