#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chaoslab {

// --threads, else CHAOSLAB_THREADS, else hardware concurrency
int resolve_threads(int requested = 0);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is claimed
// dynamically; callers must write results by index to stay deterministic.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        try {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(err_mu);
            if (!err) err = std::current_exception();
            next = n;
        }
    };
    std::vector<std::thread> pool;
    const std::size_t k = std::min<std::size_t>(threads, n);
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace chaoslab
