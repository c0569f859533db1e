#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "macbounds/pmf.hpp"

namespace macbounds {

// Memoryless channel p(y | x1, x2) over finite alphabets.
struct DiscreteChannel {
  std::size_t x1_card = 0, x2_card = 0, y_card = 0;
  std::vector<double> table;  // [(x1 * x2_card + x2) * y_card + y]

  double prob(std::size_t x1, std::size_t x2, std::size_t y) const {
    return table[(x1 * x2_card + x2) * y_card + y];
  }
  void validate() const;

  // Y = (X1, X2) with the given input alphabets.
  static DiscreteChannel noiseless(std::size_t x1_card, std::size_t x2_card);
};

// d(s, s_hat); rows index the source alphabet, cols the reconstruction.
struct DistortionTable {
  std::size_t rows = 0, cols = 0;
  std::vector<double> d;

  double at(std::size_t s, std::size_t shat) const { return d[s * cols + shat]; }
  static DistortionTable hamming(std::size_t card);
};

struct CertifySearchConfig {
  int v0_card = 2;
  int v1_card = 2;
  int v2_card = 2;
  int simplex_grid = 5;        // lattice resolution for conditional rows
  int restarts = 200;          // seeded conditional draws
  int sampled_function_pairs = 64;  // per restart, when enumeration is too big
  int max_function_enumeration = 4096;  // joint x1/x2 pairs
  std::uint64_t seed = 1;
  int threads = 1;
  double margin = 1e-9;  // strictness slack for the inequalities
};

// The auxiliary structure witnessing a point of the inner region: conditional
// codeword tables, symbol-by-symbol encoders and reconstruction maps, the
// achieved distortions and the four information margins (nats).
struct InnerCertificate {
  int v0_card = 0, v1_card = 0, v2_card = 0;
  std::vector<double> p_v0_given_s0;    // [s0][v0]
  std::vector<double> p_v1_given_s1v0;  // [s1][v0][v1]
  std::vector<double> p_v2_given_s2v0;  // [s2][v0][v2]
  std::vector<int> x1;                  // [(v0*v1_card+v1)*|S1|+s1] -> X1
  std::vector<int> x2;
  std::vector<int> shat1;  // [((v0*v1+v1c)*v2c+v2)*|Y|+y] -> reconstruction
  std::vector<int> shat2;
  double d1 = 0.0, d2 = 0.0;
  std::array<double, 4> margins{};
};

// Re-evaluates a certificate from scratch (joint rebuilt, all information
// terms recomputed); used by the searchers and the revalidation property.
struct CertificateEvaluation {
  double d1 = 0.0, d2 = 0.0;
  std::array<double, 4> margins{};
};
CertificateEvaluation evaluate_certificate(const JointPmf& source,
                                           const DiscreteChannel& channel,
                                           const DistortionTable& dist1,
                                           const DistortionTable& dist2,
                                           const InnerCertificate& cert);

// Seeded search for a point of the inner region with all four inequalities
// strict by `margin` and distortions within the targets. Absence of a
// certificate never asserts non-membership.
std::optional<InnerCertificate> certify_inner_point(
    const JointPmf& source, const DiscreteChannel& channel, double d1,
    double d2, const DistortionTable& dist1, const DistortionTable& dist2,
    const CertifySearchConfig& config);

// Distributed source coding variant: noiseless index channel with rate
// right-hand sides R1, R2, R1 + R2 and decoder maps on (V0, V1, V2).
std::optional<InnerCertificate> dsc_inner_check(
    const JointPmf& source, double r1, double r2, double d1, double d2,
    const DistortionTable& dist1, const DistortionTable& dist2,
    const CertifySearchConfig& config);

struct LosslessWitness {
  int w_card = 0;
  std::vector<double> p_w;           // [w]
  std::vector<double> p_x1_given_s1w;  // [s1][w][x1]
  std::vector<double> p_x2_given_s2w;
  std::array<double, 4> margins{};  // I - H slacks, nats
};

struct LosslessSearchConfig {
  int w_card = 2;
  int simplex_grid = 5;
  int restarts = 200;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Source-channel admissibility for lossless transmission (closed
// inequalities). Returns the first witness satisfying all four.
std::optional<LosslessWitness> check_lossless_admissible(
    const JointPmf& source, const DiscreteChannel& channel,
    const LosslessSearchConfig& config);

struct CapacityTuple {
  double i1 = 0.0;    // I(X1; Y | X2, W)
  double i2 = 0.0;    // I(X2; Y | X1, W)
  double i12 = 0.0;   // I(X1, X2; Y | W)
  double i012 = 0.0;  // I(X1, X2; Y)
};

struct CapacityGridConfig {
  int w_card = 4;
  int dirichlet_draws = 64;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Sweeps p_W p_{X1|W} p_{X2|W} and collects the rate-region corner data of
// the common-message capacity region.
std::vector<CapacityTuple> capacity_region_common_message(
    const DiscreteChannel& channel, const CapacityGridConfig& config);

// (R0, R1, R2) achievable (nats) within slack by one of the collected tuples.
bool capacity_point_achievable(const std::vector<CapacityTuple>& tuples,
                               double r0, double r1, double r2,
                               double slack = 0.0);

struct DiscretePropertyReport {
  std::size_t instances = 0;
  std::size_t violations = 0;
  std::string worst_case;
};

// Common-part properties on random thinned-support pmfs: the extracted maps
// agree on the support, re-extraction on (S0, S1) is the identity partition,
// and the attached joint marginalises back to the source.
DiscretePropertyReport verify_common_part(std::size_t count,
                                          std::uint64_t seed, int threads = 1);

// Every certificate a searcher returns must re-validate when rebuilt from
// scratch: margins and distortions within 1e-9 and strictly feasible.
DiscretePropertyReport verify_certificates(std::size_t count,
                                           std::uint64_t seed,
                                           int threads = 1);

}  // namespace macbounds
