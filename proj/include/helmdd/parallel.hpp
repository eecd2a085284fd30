#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace helmdd {

/// Process-wide worker count used by assembly, factorization and ORAS solves.
int num_threads();
void set_num_threads(int n);

/// Runs body(begin, end, worker) over [0, n) split into contiguous static
/// chunks, one per worker. Chunk boundaries depend only on n and the worker
/// count, so results are reproducible for a fixed thread count.
template <class Body>
void parallel_for(int n, Body&& body, int workers = num_threads()) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    if (n > 0) body(0, n, 0);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, begin, end, w] {
      try {
        body(begin, end, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace helmdd
