#include "macbounds/labeled_covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "macbounds/common.hpp"

namespace macbounds {

namespace {
constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = -1e-9;
}  // namespace

LabeledCovariance::LabeledCovariance(std::vector<std::string> labels,
                                     Eigen::MatrixXd matrix)
    : labels_(std::move(labels)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(labels_.size());
  if (matrix_.rows() != n || matrix_.cols() != n)
    throw invalid_input("covariance dimension does not match label count");
  std::set<std::string> uniq(labels_.begin(), labels_.end());
  if (static_cast<Eigen::Index>(uniq.size()) != n)
    throw invalid_input("covariance labels must be unique");

  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(matrix_(i, j) - matrix_(j, i)) > kSymmetryTol * scale)
        throw invalid_input("covariance matrix is not symmetric at (" +
                            labels_[i] + "," + labels_[j] + ")");
    }
  }
  if (!matrix_.allFinite())
    throw parameter_overflow("covariance matrix has non-finite entries");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_,
                                                    Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < kPsdTol * scale)
    throw invalid_problem("covariance is not positive semidefinite: eigenvalue " +
                          format_double(min_eig));
}

Eigen::Index LabeledCovariance::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return static_cast<Eigen::Index>(i);
  throw invalid_input("unknown covariance label: " + label);
}

bool LabeledCovariance::has_label(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

Eigen::MatrixXd LabeledCovariance::block(
    const std::vector<std::string>& subset) const {
  return cross(subset, subset);
}

Eigen::MatrixXd LabeledCovariance::cross(
    const std::vector<std::string>& rows,
    const std::vector<std::string>& cols) const {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = index_of(rows[i]);
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(i, j) = matrix_(r, index_of(cols[j]));
  }
  return out;
}

namespace {

// Observation variances can span many orders of magnitude (the uncoded
// embedding runs a 1e12 noise on the common codeword), so solves happen in
// correlation scale: x = S y with S = diag(sigma_ii^-1/2). Rank decisions
// are then scale-free.
Eigen::VectorXd equilibration(const Eigen::MatrixXd& m) {
  Eigen::VectorXd s(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    s(i) = m(i, i) > 0.0 ? 1.0 / std::sqrt(m(i, i)) : 1.0;
  return s;
}

}  // namespace

MmseResult mmse_reduce(const LabeledCovariance& cov, const std::string& target,
                       const std::vector<std::string>& observed) {
  MmseResult result;
  const double sigma_tt = cov.matrix()(cov.index_of(target), cov.index_of(target));
  if (observed.empty()) {
    result.error_variance = std::max(0.0, sigma_tt);
    result.coefficients = Eigen::VectorXd();
    return result;
  }

  const Eigen::MatrixXd sigma_oo = cov.block(observed);
  const Eigen::VectorXd sigma_ot = cov.cross(observed, {target}).col(0);

  const Eigen::VectorXd s = equilibration(sigma_oo);
  const Eigen::MatrixXd scaled =
      s.asDiagonal() * sigma_oo * s.asDiagonal();
  const Eigen::VectorXd rhs = s.asDiagonal() * sigma_ot;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  bool singular = ldlt.info() != Eigen::Success;
  if (!singular) {
    const auto& d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    if (dmax <= 0.0 || d.minCoeff() < 1e-12 * dmax) singular = true;
  }

  if (!singular) {
    result.coefficients = s.asDiagonal() * ldlt.solve(rhs);
  } else {
    // Rank-deficient observation block: eigendecomposition pseudo-inverse.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(1e-30, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
    result.coefficients =
        s.asDiagonal() *
        (es.eigenvectors() *
         (inv.asDiagonal() * (es.eigenvectors().transpose() * rhs)));
    result.used_pseudo_inverse = true;
  }

  result.error_variance = std::max(0.0, sigma_tt - sigma_ot.dot(result.coefficients));
  return result;
}

LogDet log_det(const LabeledCovariance& cov,
               const std::vector<std::string>& subset) {
  LogDet out;
  if (subset.empty()) return out;
  const Eigen::MatrixXd m = cov.block(subset);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    out.finite = false;
    return out;
  }
  const auto& d = ldlt.vectorD();
  const double dmax = std::max(d.maxCoeff(), 0.0);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) <= 0.0 || d(i) < 1e-14 * dmax) {
      out.finite = false;
      return out;
    }
    sum += std::log(d(i));
  }
  out.value = sum;
  return out;
}

LogDetRatio log_det_ratio(const LabeledCovariance& cov,
                          const std::vector<std::string>& subset_a,
                          const std::vector<std::string>& subset_b) {
  LogDetRatio out;
  const LogDet a = log_det(cov, subset_a);
  const LogDet b = log_det(cov, subset_b);
  if (a.finite && b.finite) {
    out.value = 0.5 * (a.value - b.value);
    return out;
  }
  out.finite = false;
  if (!a.finite && b.finite) {
    out.sign_at_infinity = -1;
    out.value = -std::numeric_limits<double>::infinity();
  } else if (a.finite && !b.finite) {
    out.sign_at_infinity = +1;
    out.value = std::numeric_limits<double>::infinity();
  } else {
    out.value = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace macbounds
