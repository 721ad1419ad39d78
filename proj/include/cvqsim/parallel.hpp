#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cvq {

// All parallel reductions in this library accumulate into fixed-size blocks
// (block b covers indices [b*kReduceBlock, (b+1)*kReduceBlock)) and combine
// the per-block partials in block order. The result is therefore independent
// of the number of threads, which is what makes sweep/pipeline outputs
// byte-reproducible.
inline constexpr std::ptrdiff_t kReduceBlock = 4096;

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <typename F>
void parallel_for(std::ptrdiff_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    body(i);
  }
}

template <typename F>
void serial_for(std::ptrdiff_t n, F&& body) {
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    body(i);
  }
}

namespace detail {

template <typename F>
double sum_block(std::ptrdiff_t lo, std::ptrdiff_t hi, F& f) {
  double s = 0.0;
  for (std::ptrdiff_t i = lo; i < hi; ++i) {
    s += f(i);
  }
  return s;
}

}  // namespace detail

/// Sum of f(i) for i in [0, n), accumulated block-wise. Bit-identical for
/// any thread count (and to blocked_sum_serial).
template <typename F>
double blocked_sum(std::ptrdiff_t n, F&& f) {
  if (n <= 0) return 0.0;
  const std::ptrdiff_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::ptrdiff_t lo = b * kReduceBlock;
    const std::ptrdiff_t hi = std::min(n, lo + kReduceBlock);
    partial[static_cast<std::size_t>(b)] = detail::sum_block(lo, hi, f);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

/// Serial twin of blocked_sum with the identical accumulation order.
template <typename F>
double blocked_sum_serial(std::ptrdiff_t n, F&& f) {
  if (n <= 0) return 0.0;
  const std::ptrdiff_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  double total = 0.0;
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::ptrdiff_t lo = b * kReduceBlock;
    const std::ptrdiff_t hi = std::min(n, lo + kReduceBlock);
    total += detail::sum_block(lo, hi, f);
  }
  return total;
}

}  // namespace cvq
