#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace macbounds {

// Worker count used by the OpenMP kernels. threads <= 1 selects the serial
// reference path; the parallel path must produce identical results since all
// loops write by index and merge in index order.
inline int effective_threads(int threads) {
#ifdef _OPENMP
  if (threads <= 0) return omp_get_max_threads();
  return threads;
#else
  (void)threads;
  return 1;
#endif
}

// Runs fn(i) for i in [0, n). The serial branch is the reference
// implementation; the OpenMP branch is the production kernel.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const int t = effective_threads(threads);
  if (t <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(t)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    fn(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace macbounds
