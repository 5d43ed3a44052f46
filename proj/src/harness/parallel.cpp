#include "gnlab/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "gnlab/errors.hpp"

namespace gnlab {

namespace {
std::atomic<size_t> g_max_threads{1};
}

void set_max_threads(size_t n) {
    require(n >= 1, ErrorKind::invalid_argument, "set_max_threads: need at least 1");
    g_max_threads.store(n);
}

size_t max_threads() {
    return g_max_threads.load();
}

void parallel_for(size_t count, const std::function<void(size_t)>& body) {
    const size_t workers = std::min(max_threads(), count);
    if (workers <= 1) {
        for (size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        threads.emplace_back(worker);
    }
    for (std::thread& t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace gnlab
