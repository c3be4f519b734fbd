#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

namespace em4lab {

/// Pairwise (cascade) summation; the grouping depends only on the length.
double pairwise_sum(std::span<const double> values);

/// Worker count from EM4LAB_THREADS (0 or unset = hardware concurrency).
unsigned worker_count();

/// Calls body(i) for i in [0, n). Work is split into contiguous chunks; the
/// exception from the lowest failing index is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t n, Body&& body);

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;
};

/// Central first- and second-derivative stencils of order 2, 4 or 6
/// (weights for unit spacing).
const Stencil& first_derivative_stencil(int order);
const Stencil& second_derivative_stencil(int order);

namespace detail {
void run_chunks(std::size_t n, void (*fn)(void*, std::size_t, std::size_t), void* ctx);
}

template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  struct Ctx {
    Body* body;
  } ctx{&body};
  detail::run_chunks(
      n,
      [](void* c, std::size_t lo, std::size_t hi) {
        auto* b = static_cast<Ctx*>(c)->body;
        for (std::size_t i = lo; i < hi; ++i) (*b)(i);
      },
      &ctx);
}

}  // namespace em4lab
