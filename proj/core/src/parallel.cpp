#include "flatten/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace flatten {

namespace {

std::atomic<unsigned> g_threads{0};

unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

void set_thread_count(unsigned n) { g_threads.store(n); }

unsigned thread_count() {
  const unsigned n = g_threads.load();
  return n == 0 ? default_threads() : n;
}

ChunkRange chunk_range(std::size_t n, std::size_t n_chunks, std::size_t c) {
  const std::size_t base = n / n_chunks;
  const std::size_t extra = n % n_chunks;
  const std::size_t begin = c * base + std::min(c, extra);
  return {begin, begin + base + (c < extra ? 1 : 0)};
}

void parallel_for_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& fn) {
  if (n_chunks == 0) return;
  const std::size_t workers = std::min<std::size_t>(thread_count(), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        fn(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace flatten
