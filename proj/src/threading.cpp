#include "laneseq/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace laneseq {

static thread_local bool inside_parallel = false;

int thread_budget() {
    static int budget = [] {
        if (const char* env = std::getenv("LANESEQ_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw ? int(hw) : 1;
    }();
    return budget;
}

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body) {
    if (n == 0) return;
    int budget = thread_budget();
    size_t workers = std::min<size_t>(budget, n);
    if (workers <= 1 || inside_parallel) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
        size_t begin = w * chunk;
        size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] {
            inside_parallel = true;
            body(begin, end);
            inside_parallel = false;
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace laneseq
