#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "macbounds/pmf.hpp"

namespace macbounds {

struct degenerate_variable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pearson correlation of two real-valued coordinates; the conditional form
// uses the expectation-over-conditioner normalisation
//   E[cov(W1,W2|W0)] / sqrt(E[var(W1|W0)] E[var(W2|W0)]).
double pearson(const JointPmf& pmf, const std::string& w1,
               const std::string& w2,
               const std::vector<std::string>& cond = {});

double pearson_samples(std::span<const double> x, std::span<const double> y);

// Correlation ratio theta(W1, W2) = sqrt(var(E[W1|W2]) / var(W1)). Both
// displayed forms are evaluated and must agree to 1e-12. W2 may be a set of
// coordinates; the conditional version follows the E[var(.|.)] identities.
double correlation_ratio(const JointPmf& pmf, const std::string& target,
                         const std::vector<std::string>& predictors,
                         const std::vector<std::string>& cond = {});

// Maximal correlation over finite alphabets: second singular value of the
// support-normalised joint matrix Q_ab = p(a,b)/sqrt(p(a) p(b)). The
// conditional value is the supremum of the per-conditioner normalised ratio,
// which the per-slice scaling freedom turns into the largest slice value.
double maximal_correlation(const JointPmf& pmf,
                           const std::vector<std::string>& a,
                           const std::vector<std::string>& b,
                           const std::vector<std::string>& cond = {});

// Independent fixed-point route (alternating conditional expectations /
// deflated power iteration); agrees with the SVD path to 1e-8.
double maximal_correlation_ace(const JointPmf& pmf,
                               const std::vector<std::string>& a,
                               const std::vector<std::string>& b,
                               const std::vector<std::string>& cond = {});

struct CorrelationReport {
  double pearson = 0.0;
  double ratio_12 = 0.0;  // theta(W1, W2)
  double ratio_21 = 0.0;  // theta(W2, W1)
  double maximal = 0.0;
  // Conditional variants keyed by the conditioning label.
  std::map<std::string, double> pearson_given;
  std::map<std::string, double> ratio_12_given;
  std::map<std::string, double> ratio_21_given;
  std::map<std::string, double> maximal_given;
};

CorrelationReport correlation_report(const JointPmf& pmf,
                                     const std::string& w1,
                                     const std::string& w2,
                                     const std::vector<std::string>& cond = {});

struct PropertyReport {
  std::size_t instances = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // most negative slack observed
  std::string worst_case;     // which inequality / instance
};

// Lemma property suites over seeded random instances. All inequalities are
// required to hold within 1e-9.
PropertyReport verify_lemma_chain(std::size_t count, std::uint64_t seed,
                                  int threads = 1);
PropertyReport verify_dpi(std::size_t count, std::uint64_t seed,
                          int threads = 1, bool equality_case = false);
PropertyReport verify_tensorization(std::size_t count, std::uint64_t seed,
                                    int n = 2, int threads = 1);

}  // namespace macbounds
