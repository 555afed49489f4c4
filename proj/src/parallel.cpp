#include "stefanlab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace stefanlab {

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("STEFANLAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

namespace {
constexpr int kChunksPerWorker = 4;
}

int chunk_count(int n) {
  // fixed chunking so the reduction order does not depend on thread count
  return std::max(1, std::min(n, 8 * kChunksPerWorker));
}

void parallel_chunks(int n, const std::function<void(int, int, int)>& fn) {
  if (n <= 0) return;
  const int chunks = chunk_count(n);
  const int workers = std::min(worker_count(), chunks);
  if (workers == 1) {
    for (int c = 0; c < chunks; ++c) {
      const int begin = static_cast<int>(static_cast<long long>(n) * c / chunks);
      const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
      fn(c, begin, end);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int c = w; c < chunks; c += workers) {
        const int begin = static_cast<int>(static_cast<long long>(n) * c / chunks);
        const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
        fn(c, begin, end);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace stefanlab
