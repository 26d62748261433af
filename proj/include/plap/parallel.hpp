#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace plap {

// Number of worker threads used by parallel_reduce / parallel_for.
// 0 (default) means hardware_concurrency.
void set_thread_count(int n);
int thread_count();

namespace detail {
inline std::int64_t block_count(std::int64_t begin, std::int64_t end, std::int64_t block) {
    return (end - begin + block - 1) / block;
}
}  // namespace detail

// Reduction over [begin, end) in fixed-size blocks. Each block is reduced
// sequentially and block results are combined in index order, so the result
// is bit-identical regardless of the number of threads.
template <class T, class BlockFn, class CombineFn>
T parallel_reduce(std::int64_t begin, std::int64_t end, T init, BlockFn block_fn,
                  CombineFn combine, std::int64_t block_size = 1 << 14) {
    if (end <= begin) return init;
    const std::int64_t nblocks = detail::block_count(begin, end, block_size);
    const int nthreads = static_cast<int>(
        std::max<std::int64_t>(1, std::min<std::int64_t>(thread_count(), nblocks)));
    if (nthreads == 1 || nblocks == 1) {
        T acc = init;
        for (std::int64_t b = 0; b < nblocks; ++b) {
            std::int64_t lo = begin + b * block_size;
            std::int64_t hi = std::min(end, lo + block_size);
            acc = combine(std::move(acc), block_fn(lo, hi));
        }
        return acc;
    }
    std::vector<T> partial(static_cast<std::size_t>(nblocks), init);
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::int64_t b = next.fetch_add(1);
            if (b >= nblocks) break;
            std::int64_t lo = begin + b * block_size;
            std::int64_t hi = std::min(end, lo + block_size);
            partial[static_cast<std::size_t>(b)] = block_fn(lo, hi);
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    T acc = init;
    for (std::int64_t b = 0; b < nblocks; ++b)
        acc = combine(std::move(acc), std::move(partial[static_cast<std::size_t>(b)]));
    return acc;
}

// Parallel loop over [begin, end); blocks must write to disjoint locations.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& block_fn,
                  std::int64_t block_size = 1 << 14);

}  // namespace plap
