#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "macbounds/gaussian.hpp"

namespace macbounds {

struct RdRate {
  double rate = 0.0;   // nats
  bool infinite = false;
};

// Cooperative rate-distortion function R_{S1S2}(D1, D2) for unit-variance
// jointly Gaussian sources with correlation rho12. Arguments are swapped
// internally so d1 <= d2; distortions above 1 cost nothing.
RdRate rd_joint(double d1, double d2, double rho12);

// The three case formulas individually (d1 <= d2 assumed), exposed so the
// boundary-continuity checks can evaluate adjacent branches directly.
double rd_joint_case(int which, double d1, double d2, double rho12);

// R_{S1S2|S0}: rd_joint after D_k' = D_k / (1 - rho0k^2) with rho12|0.
RdRate rd_joint_given_common(double d1, double d2,
                             const GaussianProblem& problem);

struct OuterWitnessPoint {
  double rho_hat = 0.0;   // in [0, 1]
  double rho_hat0 = 0.0;  // in [0, |rho12|0|]
  double beta1 = 1.0;     // in [|rho12|0|, 1]
  double theta1 = 0.0;
  double theta2 = 0.0;
};

inline constexpr std::array<const char*, 7> kOuterConstraintNames = {
    "sum_rate",         "sum_rate_given_common", "marginal_1",
    "marginal_2",       "product",               "beta_marginal_1",
    "beta_marginal_2"};

// Signed slacks (RHS - LHS) of the seven displayed inequalities. Negative
// rho12|0 is handled through |rho12|0| and sign-carrying beta2 = rho12|0/beta1;
// every appearance is through squares or the +2 rho_hat0 sqrt(P1 P2) term.
std::array<double, 7> check_constraints(double d1, double d2,
                                        const GaussianProblem& problem,
                                        const OuterWitnessPoint& witness);

struct OuterGridConfig {
  int rho_hat_points = 101;
  int rho_hat0_points = 51;
  int beta_points = 51;
  int theta_scan_points = 33;
  int theta_refine_iters = 40;
};

struct BetaRecord {
  double beta1 = 1.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double min_margin = 0.0;
};

struct OuterWitness {
  double rho_hat = 0.0;
  double rho_hat0 = 0.0;
  std::vector<BetaRecord> per_beta;
};

struct MembershipVerdict {
  bool member = false;
  std::string violated_constraint;  // empty when member
  double tightest_margin = 0.0;
};

struct OuterMembership {
  MembershipVerdict verdict;
  std::optional<OuterWitness> witness;
};

// Existential scan over the (rho_hat, rho_hat0) grid; each candidate must
// survive every beta1 grid point with theta searched on the boundary
// theta1 theta2 = rho_hat. Grid-relative in the conservative direction: a
// non-member verdict can be a false negative of the true necessary condition.
OuterMembership outer_membership(double d1, double d2,
                                 const GaussianProblem& problem,
                                 const OuterGridConfig& grid = {},
                                 int threads = 1);

// Bisection for the smallest D with (D, D) a member; requires p1 == p2.
double symmetric_outer_min_distortion(const GaussianProblem& problem,
                                      const OuterGridConfig& grid = {},
                                      double tol = 1e-5, int threads = 1);

// Independent transcription of the symmetric-case corollary, used to
// cross-check the general machinery on (P, D) grids.
bool cor1_symmetric_membership(const GaussianProblem& problem, double d,
                               const OuterGridConfig& grid = {},
                               int threads = 1);

}  // namespace macbounds
