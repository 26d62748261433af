#include "plap/parallel.hpp"

#include <algorithm>

namespace plap {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() {
    int n = g_threads.load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& block_fn,
                  std::int64_t block_size) {
    if (end <= begin) return;
    const std::int64_t nblocks = detail::block_count(begin, end, block_size);
    const int nthreads = static_cast<int>(
        std::max<std::int64_t>(1, std::min<std::int64_t>(thread_count(), nblocks)));
    if (nthreads == 1) {
        block_fn(begin, end);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::int64_t b = next.fetch_add(1);
            if (b >= nblocks) break;
            std::int64_t lo = begin + b * block_size;
            std::int64_t hi = std::min(end, lo + block_size);
            block_fn(lo, hi);
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
}

}  // namespace plap
