#include "em4lab/numeric.hpp"

#include "em4lab/error.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

namespace em4lab {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

unsigned worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("EM4LAB_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(std::min<long>(n, 256));
  }
  return hw;
}

namespace detail {

void run_chunks(std::size_t n, void (*fn)(void*, std::size_t, std::size_t), void* ctx) {
  if (n == 0) return;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1) {
    fn(ctx, 0, n);
    return;
  }
  const std::size_t chunk = std::max<std::size_t>(1, n / (static_cast<std::size_t>(workers) * 8));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = n;
  std::exception_ptr failure;

  auto work = [&] {
    while (true) {
      const std::size_t lo = next.fetch_add(chunk);
      if (lo >= n) return;
      const std::size_t hi = std::min(n, lo + chunk);
      try {
        fn(ctx, lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (lo < failed_at) {
          failed_at = lo;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

const Stencil& first_derivative_stencil(int order) {
  static const Stencil o2{{-1, 0, 1}, {-0.5, 0.0, 0.5}};
  static const Stencil o4{{-2, -1, 0, 1, 2}, {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12}};
  static const Stencil o6{{-3, -2, -1, 0, 1, 2, 3},
                          {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60}};
  switch (order) {
    case 2: return o2;
    case 4: return o4;
    case 6: return o6;
  }
  throw Error(ErrorCode::kInvalidArgument, "finite-difference order must be 2, 4 or 6, got " + std::to_string(order));
}

const Stencil& second_derivative_stencil(int order) {
  static const Stencil o2{{-1, 0, 1}, {1.0, -2.0, 1.0}};
  static const Stencil o4{{-2, -1, 0, 1, 2}, {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12}};
  static const Stencil o6{{-3, -2, -1, 0, 1, 2, 3},
                          {1.0 / 90, -3.0 / 20, 3.0 / 2, -49.0 / 18, 3.0 / 2, -3.0 / 20, 1.0 / 90}};
  switch (order) {
    case 2: return o2;
    case 4: return o4;
    case 6: return o6;
  }
  throw Error(ErrorCode::kInvalidArgument, "finite-difference order must be 2, 4 or 6, got " + std::to_string(order));
}

}  // namespace em4lab
