#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mott {

inline unsigned default_workers() {
  const unsigned h = std::thread::hardware_concurrency();
  return h ? h : 1;
}

/// Evaluates f(0..count-1) on `workers` threads. Results are stored by index,
/// so the output never depends on scheduling. The first exception (by index)
/// is rethrown after all workers finish.
template <class F>
auto parallel_map(std::size_t count, unsigned workers, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errs(count);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = f(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const unsigned w = workers == 0 ? default_workers() : workers;
  if (w <= 1 || count <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < w && k < count; ++k) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace mott
