// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace splatstyle {
namespace {

std::atomic<int> g_threads{0};

} // namespace

int thread_count() {
    int n = g_threads.load();
    if (n <= 0) {
        n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    return n;
}

void set_thread_count(int n) { g_threads.store(std::max(0, n)); }

void parallel_chunks(int chunks, const std::function<void(int)>& fn) {
    const int workers = std::min(thread_count(), chunks);
    if (workers <= 1) {
        for (int i = 0; i < chunks; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (int i = next.fetch_add(1); i < chunks; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) {
        pool.emplace_back(run);
    }
    run();
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace splatstyle
