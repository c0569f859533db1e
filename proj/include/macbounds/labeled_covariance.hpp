#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace macbounds {

// Symmetric PSD matrix with named coordinates. Sub-block extraction by label
// keeps the quantifier-heavy determinant formulas readable at call sites.
//
// Matrices are stored exactly as supplied: eigenvalues down to -1e-9 are
// accepted (parameter sweeps graze the PSD boundary) and the clamping happens
// at use sites (MMSE error floored at 0, non-positive pivots flagged in log
// determinants), never by rewriting the matrix.
class LabeledCovariance {
 public:
  LabeledCovariance(std::vector<std::string> labels, Eigen::MatrixXd matrix);

  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }

  Eigen::Index index_of(const std::string& label) const;
  bool has_label(const std::string& label) const;

  // Sub-block in the requested label order.
  Eigen::MatrixXd block(const std::vector<std::string>& subset) const;
  // Cross-covariance rows x cols.
  Eigen::MatrixXd cross(const std::vector<std::string>& rows,
                        const std::vector<std::string>& cols) const;

 private:
  std::vector<std::string> labels_;
  Eigen::MatrixXd matrix_;
};

struct MmseResult {
  Eigen::VectorXd coefficients;  // estimator weights on the observed block
  double error_variance = 0.0;   // Schur complement, clamped to >= 0
  bool used_pseudo_inverse = false;
};

// MMSE estimation of `target` from `observed`:
//   error = sigma_tt - sigma_to sigma_oo^-1 sigma_ot.
// Singular observation blocks (e.g. omega = 0 hybrid parameters) fall back to
// the eigendecomposition pseudo-inverse and set the flag.
MmseResult mmse_reduce(const LabeledCovariance& cov, const std::string& target,
                       const std::vector<std::string>& observed);

struct LogDet {
  double value = 0.0;  // natural log of the determinant
  bool finite = true;  // false when a pivot is (numerically) non-positive
};

// log|sigma_subset| through the pivoted LDL^T factorisation.
LogDet log_det(const LabeledCovariance& cov,
               const std::vector<std::string>& subset);

struct LogDetRatio {
  double value = 0.0;  // 0.5 * (log|sigma_a| - log|sigma_b|), nats
  bool finite = true;
  int sign_at_infinity = 0;  // +1 / -1 when one determinant vanished
};

LogDetRatio log_det_ratio(const LabeledCovariance& cov,
                          const std::vector<std::string>& subset_a,
                          const std::vector<std::string>& subset_b);

}  // namespace macbounds
