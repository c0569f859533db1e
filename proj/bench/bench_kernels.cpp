// Timing harness comparing the serial reference kernels against their
// OpenMP counterparts. Correctness of the pairing is covered by
// tests/test_parallel.cpp; this target only reports throughput.

#include <chrono>
#include <cstdio>
#include <string>

#include "macbounds/correlation.hpp"
#include "macbounds/gaussian.hpp"
#include "macbounds/hybrid.hpp"
#include "macbounds/outer.hpp"
#include "macbounds/parallel.hpp"

using namespace macbounds;

namespace {

template <typename Fn>
double time_of(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(const char* kernel, double serial, double parallel) {
  std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %.2fx\n",
              kernel, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::stoi(argv[1]) : effective_threads(0);
  std::printf("comparing serial reference vs %d OpenMP threads\n\n", threads);

  GaussianProblem prob{0.8, 0.8, 0.3, 10.0, 10.0};
  const auto dec = conditional_rho(prob);

  {
    const std::size_t n = 8000000;
    const double s = time_of([&] { sample_sources(prob, dec, n, 1, 1); });
    const double p = time_of([&] { sample_sources(prob, dec, n, 1, threads); });
    report("source sampling (8M)", s, p);
  }
  {
    const std::size_t n = 6000000;
    const UncodedGains g{1.2, 2.9, 1.2, 2.9};
    const double s = time_of([&] { simulate_uncoded(prob, g, n, 2, 1); });
    const double p =
        time_of([&] { simulate_uncoded(prob, g, n, 2, threads); });
    report("uncoded simulation (6M)", s, p);
  }
  {
    OuterGridConfig grid;
    const double s = time_of(
        [&] { symmetric_outer_min_distortion(prob, grid, 1e-5, 1); });
    const double p = time_of(
        [&] { symmetric_outer_min_distortion(prob, grid, 1e-5, threads); });
    report("outer bound bisection", s, p);
  }
  {
    HybridSearchOptions opt;
    opt.budget = 20000;
    opt.seed = 5;
    opt.uncoded_start = optimize_uncoded(prob, 48).gains;
    opt.threads = 1;
    const double s = time_of([&] { optimize_hybrid(prob, opt); });
    opt.threads = threads;
    const double p = time_of([&] { optimize_hybrid(prob, opt); });
    report("hybrid multi-start search", s, p);
  }
  {
    const double s = time_of([&] { verify_lemma_chain(1500, 3, 1); });
    const double p = time_of([&] { verify_lemma_chain(1500, 3, threads); });
    report("lemma-chain properties", s, p);
  }
  return 0;
}
