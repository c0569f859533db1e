#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "macbounds/gaussian.hpp"
#include "macbounds/labeled_covariance.hpp"

namespace macbounds {

// Free variables of the hybrid coding scheme:
//   V0  = S0 + W0
//   V_k = F_k (S0, S_k, V0)^T + W_k
//   X_k = G_k (S0, S_k, V0, V_k)^T
// with W_k ~ N(0, omega_k) mutually independent and independent of the
// sources. S_k denotes the scalar coordinate S_k'.
struct HybridParams {
  std::array<double, 3> f1{};
  std::array<double, 3> f2{};
  std::array<double, 4> g1{};
  std::array<double, 4> g2{};
  double omega0 = 1.0;
  double omega1 = 1.0;
  double omega2 = 1.0;

  void validate() const;
};

struct HybridEvaluation {
  double d1 = 1.0;  // MMSE of S1' from (V0, V1, V2, Y)
  double d2 = 1.0;
  double power1 = 0.0;  // E[X_k^2]
  double power2 = 0.0;
  // Signed slack, RHS - LHS, of the four determinant-ratio inequalities in
  // the log-determinant domain (twice the mutual-information difference).
  std::array<double, 4> margins{};
  bool feasible = false;
  bool degenerate = false;  // pseudo-inverse or vanishing determinant hit
};

// Strictness slack for the inequalities (log domain).
inline constexpr double kHybridMarginSlack = 1e-9;

// 7x7 matrix A mapping (S0,S1,S2,W0,W1,W2,Z) to (S0,S1,S2,V0,V1,V2,Y).
Eigen::MatrixXd assemble_transfer_matrix(const HybridParams& params);

// A Sigma A^T over labels (S0,S1,S2,V0,V1,V2,Y); the (S0,S1,S2) marginal
// equals the source covariance bit-exactly.
LabeledCovariance hybrid_joint_covariance(const HybridParams& params,
                                          const GaussianProblem& problem);

HybridEvaluation evaluate_hybrid(const HybridParams& params,
                                 const GaussianProblem& problem);

// Diagnostic: the four margins with the proof-display variable sets (scalar
// S_k without the common coordinate) instead of the theorem-statement sets.
std::array<double, 4> hybrid_margins_proof_form(const HybridParams& params,
                                                const GaussianProblem& problem);

// Linear symbol-by-symbol encoders X1 = g10 S0 + g11 U1, X2 = g20 S0 + g22 U2.
struct UncodedGains {
  double g10 = 0.0, g11 = 0.0, g20 = 0.0, g22 = 0.0;
};

// Closed-form distortions of the uncoded scheme with MMSE decoding from Y.
std::pair<double, double> uncoded_distortions(const UncodedGains& gains,
                                              const GaussianProblem& problem);

// Expresses the uncoded scheme in hybrid coordinates: F rows zero, G rows
// rebased from (S0, U_k) onto (S0, S_k'). The common codeword is made
// uninformative with a large omega0 so the evaluated distortions match the
// closed forms; see embed_omega0.
HybridParams embed_uncoded(const UncodedGains& gains,
                           const GaussianProblem& problem);
inline constexpr double kEmbedOmega0 = 1e12;

struct SimulatedDistortion {
  double d1 = 0.0, d2 = 0.0;
  double stderr1 = 0.0, stderr2 = 0.0;  // standard error of the d estimates
  std::size_t n = 0;
};

// Per-sample simulation of the uncoded scheme with the closed-form decoder.
SimulatedDistortion simulate_uncoded(const GaussianProblem& problem,
                                     const UncodedGains& gains, std::size_t n,
                                     std::uint64_t seed, int threads = 1);

struct UncodedOptimum {
  UncodedGains gains;
  double d1 = 1.0, d2 = 1.0;
};

// Grid over the power-sphere angles plus compass refinement, minimizing
// max(d1, d2). Power constraints are saturated by construction.
UncodedOptimum optimize_uncoded(const GaussianProblem& problem,
                                int resolution = 96,
                                const std::vector<UncodedGains>& extra_starts = {});

enum class HybridObjective {
  SymmetricMax,  // minimize max(d1, d2)
  Targets,       // minimize max(d1 - target_d1, d2 - target_d2)
  Weighted,      // minimize d1 + lambda * d2
};

struct HybridSearchOptions {
  std::size_t budget = 24000;  // total evaluation budget across starts
  std::uint64_t seed = 1;
  int threads = 1;
  HybridObjective objective = HybridObjective::SymmetricMax;
  double target_d1 = 0.0, target_d2 = 0.0;
  double lambda = 1.0;
  std::vector<HybridParams> extra_starts;
  // Seed the search with the dithered embedding of this uncoded point (the
  // sweep passes the uncoded optimum so hybrid never reports worse).
  std::optional<UncodedGains> uncoded_start;
};

struct HybridSearchResult {
  HybridParams params;
  HybridEvaluation evaluation;
  bool found_feasible = false;
  double objective = 0.0;
  std::size_t evaluations = 0;
};

HybridSearchResult optimize_hybrid(const GaussianProblem& problem,
                                   const HybridSearchOptions& options);

// Strictly feasible point near the uncoded scheme: V1, V2 carry a small known
// dither into the channel so all four inequalities hold with margin close to
// margin_target while the distortion stays within O(margin) of the closed
// form. The default target keeps the distortion penalty, roughly
// margin * Var(Y) * |dD/dP|, below 1e-9 across the sweep range. Returns
// nothing when no dither scale gives positive margins (P = 0).
std::optional<HybridParams> dithered_uncoded_embedding(
    const UncodedGains& gains, const GaussianProblem& problem,
    double margin_target = 1.5e-9);

}  // namespace macbounds
