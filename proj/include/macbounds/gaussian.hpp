#pragma once

#include <cstdint>
#include <vector>

#include "macbounds/labeled_covariance.hpp"

namespace macbounds {

// Unit-variance jointly Gaussian sources S_k = (S0, S_k') with correlations
// (rho01, rho02, rho12), sent over Y = X1 + X2 + Z with unit channel noise and
// per-sender powers (p1, p2). General variances are covered by rescaling the
// powers and distortions.
struct GaussianProblem {
  double rho01 = 0.0;
  double rho02 = 0.0;
  double rho12 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  // Throws invalid_problem naming the offending eigenvalue or parameter.
  void validate() const;
  bool symmetric() const { return p1 == p2 && rho01 == rho02; }
};

// Coefficients splitting the conditional sources:
//   S_k' = rho0k S0 + sqrt(1-rho0k^2) U_k,
//   U_k  = beta_k U + sqrt(1-beta_k^2) B_k,  beta1 beta2 = rho12|0.
struct SourceDecomposition {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double rho12_given_0 = 0.0;
};

// 3x3 covariance of (S0, S1p, S2p) with unit diagonal.
LabeledCovariance build_source_covariance(const GaussianProblem& problem);

// rho12|0 = (rho12 - rho01 rho02)/sqrt((1-rho01^2)(1-rho02^2)), with the
// default symmetric split beta1 = sqrt(|rho12|0|) and the sign on beta2.
// Requires rho01^2 < 1 and rho02^2 < 1.
SourceDecomposition conditional_rho(const GaussianProblem& problem);

struct SourceSamples {
  std::vector<double> s0, s1p, s2p, u;
};

// Seeded sampling of the source decomposition. Output is byte-identical for
// identical (problem, decomposition, n, seed) and any thread count: samples
// are generated in fixed-size blocks with per-block derived seeds.
SourceSamples sample_sources(const GaussianProblem& problem,
                             const SourceDecomposition& decomposition,
                             std::size_t n, std::uint64_t seed,
                             int threads = 1);

}  // namespace macbounds
