#include "irbridge/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace irbridge {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void for_chunks(int n_chunks, int n_threads, const std::function<void(int)>& body) {
  if (n_chunks <= 0) return;
  n_threads = std::min(resolve_threads(n_threads), n_chunks);
  if (n_threads <= 1) {
    for (int c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= n_chunks || failed.load()) return;
      try {
        body(c);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace irbridge
