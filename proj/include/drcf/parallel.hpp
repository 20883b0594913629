#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace drcf {

/// Runs fn(task) for task in [0, tasks), task t on worker t % threads.
/// Workers only write task-private output, so callers can combine results in
/// task order and stay independent of `threads`.
template <typename Fn>
void parallel_tasks(std::size_t tasks, std::size_t threads, Fn&& fn) {
    if (threads <= 1 || tasks <= 1) {
        for (std::size_t t = 0; t < tasks; ++t) fn(t);
        return;
    }
    const std::size_t workers = threads < tasks ? threads : tasks;
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t t = w; t < tasks; t += workers) fn(t);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace drcf
