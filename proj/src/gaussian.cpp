#include "macbounds/gaussian.hpp"

#include <cmath>
#include <random>

#include "macbounds/common.hpp"
#include "macbounds/parallel.hpp"

namespace macbounds {

void GaussianProblem::validate() const {
  for (double r : {rho01, rho02, rho12})
    if (!(r >= -1.0 && r <= 1.0))
      throw invalid_problem("correlation outside [-1,1]: " + format_double(r));
  if (!(p1 >= 0.0) || !(p2 >= 0.0))
    throw invalid_problem("channel powers must be nonnegative");

  Eigen::Matrix3d m;
  m << 1.0, rho01, rho02, rho01, 1.0, rho12, rho02, rho12, 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-10)
    throw invalid_problem("source covariance is not PSD: eigenvalue " +
                          format_double(min_eig));
}

LabeledCovariance build_source_covariance(const GaussianProblem& problem) {
  problem.validate();
  Eigen::MatrixXd m(3, 3);
  m << 1.0, problem.rho01, problem.rho02,
       problem.rho01, 1.0, problem.rho12,
       problem.rho02, problem.rho12, 1.0;
  return LabeledCovariance({"S0", "S1p", "S2p"}, m);
}

SourceDecomposition conditional_rho(const GaussianProblem& problem) {
  problem.validate();
  if (problem.rho01 * problem.rho01 >= 1.0 ||
      problem.rho02 * problem.rho02 >= 1.0)
    throw degenerate_conditioning(
        "conditional correlation undefined at |rho0k| = 1");
  SourceDecomposition d;
  d.rho12_given_0 =
      (problem.rho12 - problem.rho01 * problem.rho02) /
      std::sqrt((1.0 - problem.rho01 * problem.rho01) *
                (1.0 - problem.rho02 * problem.rho02));
  const double root = std::sqrt(std::abs(d.rho12_given_0));
  d.beta1 = root;
  d.beta2 = d.rho12_given_0 >= 0.0 ? root : -root;
  return d;
}

namespace {
constexpr std::size_t kSampleBlock = 1 << 16;
}

SourceSamples sample_sources(const GaussianProblem& problem,
                             const SourceDecomposition& decomposition,
                             std::size_t n, std::uint64_t seed, int threads) {
  if (n < 1) throw invalid_input("sample count must be >= 1");
  problem.validate();

  SourceSamples out;
  out.s0.resize(n);
  out.s1p.resize(n);
  out.s2p.resize(n);
  out.u.resize(n);

  const double a1 = problem.rho01, b1 = std::sqrt(1.0 - a1 * a1);
  const double a2 = problem.rho02, b2 = std::sqrt(1.0 - a2 * a2);
  const double c1 = decomposition.beta1,
               e1 = std::sqrt(std::max(0.0, 1.0 - c1 * c1));
  const double c2 = decomposition.beta2,
               e2 = std::sqrt(std::max(0.0, 1.0 - c2 * c2));

  const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
  parallel_for(blocks, threads, [&](std::size_t blk) {
    std::mt19937_64 eng(derive_seed(seed, blk));
    std::normal_distribution<double> nd(0.0, 1.0);
    const std::size_t lo = blk * kSampleBlock;
    const std::size_t hi = std::min(n, lo + kSampleBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      const double s0 = nd(eng);
      const double uu = nd(eng);
      const double w1 = nd(eng);
      const double w2 = nd(eng);
      const double u1 = c1 * uu + e1 * w1;
      const double u2 = c2 * uu + e2 * w2;
      out.s0[i] = s0;
      out.u[i] = uu;
      out.s1p[i] = a1 * s0 + b1 * u1;
      out.s2p[i] = a2 * s0 + b2 * u2;
    }
  });
  return out;
}

}  // namespace macbounds
