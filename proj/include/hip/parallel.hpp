#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <thread>
#include <type_traits>
#include <vector>

namespace hip {

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs fn over items on up to `workers` threads with at most `workers` items in
// flight, and hands results to sink(index, result) on the calling thread in
// input order. Output is therefore identical for any worker count.
//
// On the first exception or stop request no new items start; results for the
// contiguous completed prefix are still delivered, then the exception (if any)
// is rethrown.
template <class T, class Fn, class Sink>
void parallel_ordered(std::span<const T> items, std::size_t workers, Fn&& fn, Sink&& sink,
                      std::stop_token stop = {}) {
    using R = std::invoke_result_t<Fn&, const T&>;
    const std::size_t n = items.size();
    if (n == 0) return;
    workers = std::clamp<std::size_t>(workers, 1, n);

    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            if (stop.stop_requested()) return;
            sink(i, fn(items[i]));
        }
        return;
    }

    std::vector<std::optional<R>> slots(n);
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> halt{false};
    std::exception_ptr error;
    std::size_t running = workers;

    auto worker = [&] {
        for (;;) {
            if (halt.load() || stop.stop_requested()) break;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                R r = fn(items[i]);
                std::lock_guard lock(mu);
                slots[i].emplace(std::move(r));
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                halt = true;
            }
            cv.notify_all();
        }
        std::lock_guard lock(mu);
        --running;
        cv.notify_all();
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);

    std::size_t emitted = 0;
    std::unique_lock lock(mu);
    while (emitted < n) {
        cv.wait(lock, [&] { return slots[emitted].has_value() || running == 0; });
        if (!slots[emitted].has_value()) break;
        R r = std::move(*slots[emitted]);
        slots[emitted].reset();
        lock.unlock();
        try {
            sink(emitted, std::move(r));
        } catch (...) {
            halt = true;
            pool.clear();
            throw;
        }
        ++emitted;
        lock.lock();
    }
    lock.unlock();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace hip
