#include "macbounds/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "macbounds/common.hpp"
#include "macbounds/parallel.hpp"
#include "macbounds/pattern_search.hpp"

namespace macbounds {

namespace {

// Coordinate order of the joint vector: S0, S1, S2, V0, V1, V2, Y.
enum : int { S0 = 0, S1 = 1, S2 = 2, V0 = 3, V1 = 4, V2 = 5, Y = 6 };

const std::vector<std::string> kJointLabels = {"S0", "S1", "S2", "V0",
                                               "V1", "V2", "Y"};

Eigen::Matrix<double, 7, 7> transfer_matrix(const HybridParams& p) {
  Eigen::Matrix<double, 7, 7> a = Eigen::Matrix<double, 7, 7>::Zero();
  a(S0, 0) = 1.0;
  a(S1, 1) = 1.0;
  a(S2, 2) = 1.0;
  a(V0, 0) = 1.0;
  a(V0, 3) = 1.0;
  // V1 = f11 S0 + f12 S1 + f13 (S0 + W0) + W1
  a(V1, 0) = p.f1[0] + p.f1[2];
  a(V1, 1) = p.f1[1];
  a(V1, 3) = p.f1[2];
  a(V1, 4) = 1.0;
  a(V2, 0) = p.f2[0] + p.f2[2];
  a(V2, 2) = p.f2[1];
  a(V2, 3) = p.f2[2];
  a(V2, 5) = 1.0;
  // Y = X1 + X2 + Z expanded onto the base coordinates.
  a(Y, 0) = p.g1[0] + p.g2[0] + p.g1[2] + p.g2[2] +
            p.g1[3] * (p.f1[0] + p.f1[2]) + p.g2[3] * (p.f2[0] + p.f2[2]);
  a(Y, 1) = p.g1[1] + p.g1[3] * p.f1[1];
  a(Y, 2) = p.g2[1] + p.g2[3] * p.f2[1];
  a(Y, 3) = p.g1[2] + p.g1[3] * p.f1[2] + p.g2[2] + p.g2[3] * p.f2[2];
  a(Y, 4) = p.g1[3];
  a(Y, 5) = p.g2[3];
  a(Y, 6) = 1.0;
  return a;
}

Eigen::Matrix<double, 7, 7> base_covariance(const HybridParams& p,
                                            const GaussianProblem& prob) {
  Eigen::Matrix<double, 7, 7> s = Eigen::Matrix<double, 7, 7>::Zero();
  s(0, 0) = s(1, 1) = s(2, 2) = 1.0;
  s(0, 1) = s(1, 0) = prob.rho01;
  s(0, 2) = s(2, 0) = prob.rho02;
  s(1, 2) = s(2, 1) = prob.rho12;
  s(3, 3) = p.omega0;
  s(4, 4) = p.omega1;
  s(5, 5) = p.omega2;
  s(6, 6) = 1.0;
  return s;
}

Eigen::Matrix<double, 7, 7> joint_covariance_raw(const HybridParams& p,
                                                 const GaussianProblem& prob) {
  const auto a = transfer_matrix(p);
  const auto base = base_covariance(p, prob);
  Eigen::Matrix<double, 7, 7> joint = a * base * a.transpose();
  // The first three rows of A are unit vectors; keep the source marginal
  // bit-exact rather than trusting the product's rounding.
  joint.topLeftCorner<3, 3>() = base.topLeftCorner<3, 3>();
  joint = (0.5 * (joint + joint.transpose())).eval();
  return joint;
}

// Solves in correlation scale so mixed-magnitude variances (embedding noise
// at 1e12 next to unit sources) keep full precision and scale-free rank
// decisions.
Eigen::VectorXd solve_psd(const Eigen::MatrixXd& oo, const Eigen::VectorXd& ot,
                          bool& degenerate) {
  Eigen::VectorXd s(oo.rows());
  for (Eigen::Index i = 0; i < oo.rows(); ++i)
    s(i) = oo(i, i) > 0.0 ? 1.0 / std::sqrt(oo(i, i)) : 1.0;
  const Eigen::MatrixXd scaled = s.asDiagonal() * oo * s.asDiagonal();
  const Eigen::VectorXd rhs = s.asDiagonal() * ot;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  bool singular = ldlt.info() != Eigen::Success;
  if (!singular) {
    const auto& d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    if (dmax <= 0.0 || d.minCoeff() < 1e-12 * dmax) singular = true;
  }
  if (!singular) return s.asDiagonal() * ldlt.solve(rhs);

  degenerate = true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cutoff = 1e-12 * std::max(1e-30, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
  return s.asDiagonal() *
         (es.eigenvectors() *
          (inv.asDiagonal() * (es.eigenvectors().transpose() * rhs)));
}

// log|Sigma_{A|C}| with pseudo-inverse conditioning, so rank-deficient
// conditioning sets (a fully common source, omega = 0 parameters) reduce to
// their support instead of poisoning the determinant ratios.
double conditional_logdet(const Eigen::Matrix<double, 7, 7>& m,
                          const std::vector<int>& a, const std::vector<int>& c,
                          bool& finite, bool& degenerate) {
  Eigen::MatrixXd aa(a.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) aa(i, j) = m(a[i], a[j]);

  if (!c.empty()) {
    Eigen::MatrixXd cc(c.size(), c.size());
    Eigen::MatrixXd ca(c.size(), a.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) cc(i, j) = m(c[i], c[j]);
      for (std::size_t j = 0; j < a.size(); ++j) ca(i, j) = m(c[i], a[j]);
    }
    Eigen::MatrixXd solved(c.size(), a.size());
    for (std::size_t j = 0; j < a.size(); ++j)
      solved.col(j) = solve_psd(cc, ca.col(j), degenerate);
    aa -= ca.transpose() * solved;
    aa = (0.5 * (aa + aa.transpose())).eval();
  }

  // Rank decisions on the conditional block are again made in correlation
  // scale; the log determinant picks the diagonal scale back up.
  Eigen::VectorXd sa(aa.rows());
  double log_scale = 0.0;
  for (Eigen::Index i = 0; i < aa.rows(); ++i) {
    if (!(aa(i, i) > 0.0)) {
      finite = false;  // a coordinate is fully explained by the conditioning
      return 0.0;
    }
    sa(i) = 1.0 / std::sqrt(aa(i, i));
    log_scale += std::log(aa(i, i));
  }
  const Eigen::MatrixXd scaled = sa.asDiagonal() * aa * sa.asDiagonal();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
  if (ldlt.info() != Eigen::Success) {
    finite = false;
    return 0.0;
  }
  const auto& d = ldlt.vectorD();
  const double dmax = std::max(0.0, d.maxCoeff());
  double sum = log_scale;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) <= 0.0 || d(i) < 1e-13 * std::max(1.0, dmax)) {
      finite = false;
      return 0.0;
    }
    sum += std::log(d(i));
  }
  return sum;
}

double mmse_subset(const Eigen::Matrix<double, 7, 7>& m, int target,
                   const std::vector<int>& observed, bool& degenerate) {
  Eigen::MatrixXd oo(observed.size(), observed.size());
  Eigen::VectorXd ot(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ot(i) = m(observed[i], target);
    for (std::size_t j = 0; j < observed.size(); ++j)
      oo(i, j) = m(observed[i], observed[j]);
  }
  const Eigen::VectorXd coef = solve_psd(oo, ot, degenerate);
  const double err = m(target, target) - ot.dot(coef);
  return std::min(1.0, std::max(0.0, err));
}

double power_of(const Eigen::Matrix<double, 7, 7>& joint,
                const std::array<double, 4>& g, int sk) {
  const int idx[4] = {S0, sk, V0, sk == S1 ? V1 : V2};
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) sum += g[i] * g[j] * joint(idx[i], idx[j]);
  return sum;
}

// Each determinant-ratio inequality, written as conditional covariances of
// the codeword block V:
//   margin_i = log|Sigma_{V_i | sources-side}| - log|Sigma_{V_i | Y-side}|,
// which equals the log of the theorem's ratio inequality (twice the mutual
// information difference) and stays finite for rank-deficient sources.
struct MarginSets {
  std::vector<int> v, cond_s, cond_y;
};

// Theorem-statement sets: S_k means the pair (S0, S_k').
const MarginSets kMargins[4] = {
    {{V1}, {V0, V2, S0, S1}, {V0, V2, Y}},
    {{V2}, {V0, V1, S0, S2}, {V0, V1, Y}},
    {{V1, V2}, {V0, S0, S1, S2}, {V0, Y}},
    {{V0, V1, V2}, {S0, S1, S2}, {Y}},
};

// Proof-display sets: scalar S_k only.
const MarginSets kMarginsProofForm[4] = {
    {{V1}, {V0, V2, S1}, {V0, V2, Y}},
    {{V2}, {V0, V1, S2}, {V0, V1, Y}},
    {{V1, V2}, {V0, S1, S2}, {V0, Y}},
    {{V0, V1, V2}, {S1, S2}, {Y}},
};

std::array<double, 4> compute_margins(const Eigen::Matrix<double, 7, 7>& joint,
                                      const MarginSets* sets,
                                      bool& degenerate) {
  std::array<double, 4> margins{};
  for (int i = 0; i < 4; ++i) {
    bool fin_s = true, fin_y = true;
    const double side_s =
        conditional_logdet(joint, sets[i].v, sets[i].cond_s, fin_s, degenerate);
    const double side_y =
        conditional_logdet(joint, sets[i].v, sets[i].cond_y, fin_y, degenerate);
    if (fin_s && fin_y) {
      margins[i] = side_s - side_y;
    } else if (!fin_s && fin_y) {
      // Source side explains V exactly: infinite source information.
      margins[i] = -std::numeric_limits<double>::infinity();
      degenerate = true;
    } else if (fin_s && !fin_y) {
      margins[i] = std::numeric_limits<double>::infinity();
      degenerate = true;
    } else {
      margins[i] = std::numeric_limits<double>::quiet_NaN();
      degenerate = true;
    }
  }
  return margins;
}

HybridEvaluation evaluate_joint(const Eigen::Matrix<double, 7, 7>& joint,
                                const HybridParams& p,
                                const GaussianProblem& prob) {
  if (!joint.allFinite())
    throw parameter_overflow("hybrid joint covariance has non-finite entries");

  HybridEvaluation ev;
  const std::vector<int> decoder = {V0, V1, V2, Y};
  ev.d1 = mmse_subset(joint, S1, decoder, ev.degenerate);
  ev.d2 = mmse_subset(joint, S2, decoder, ev.degenerate);
  ev.power1 = power_of(joint, p.g1, S1);
  ev.power2 = power_of(joint, p.g2, S2);
  ev.margins = compute_margins(joint, kMargins, ev.degenerate);

  const double ptol1 = prob.p1 * (1.0 + 1e-12) + 1e-15;
  const double ptol2 = prob.p2 * (1.0 + 1e-12) + 1e-15;
  ev.feasible = ev.power1 <= ptol1 && ev.power2 <= ptol2;
  for (double m : ev.margins)
    ev.feasible = ev.feasible && (m > kHybridMarginSlack);
  return ev;
}

}  // namespace

void HybridParams::validate() const {
  if (!(omega0 >= 0.0 && omega1 >= 0.0 && omega2 >= 0.0))
    throw invalid_input("hybrid noise variances must be nonnegative");
  for (double c : {f1[0], f1[1], f1[2], f2[0], f2[1], f2[2], g1[0], g1[1],
                   g1[2], g1[3], g2[0], g2[1], g2[2], g2[3]})
    if (!std::isfinite(c))
      throw invalid_input("hybrid coefficients must be finite");
}

Eigen::MatrixXd assemble_transfer_matrix(const HybridParams& params) {
  params.validate();
  return transfer_matrix(params);
}

LabeledCovariance hybrid_joint_covariance(const HybridParams& params,
                                          const GaussianProblem& problem) {
  params.validate();
  problem.validate();
  return LabeledCovariance(kJointLabels, joint_covariance_raw(params, problem));
}

HybridEvaluation evaluate_hybrid(const HybridParams& params,
                                 const GaussianProblem& problem) {
  params.validate();
  problem.validate();
  return evaluate_joint(joint_covariance_raw(params, problem), params, problem);
}

std::array<double, 4> hybrid_margins_proof_form(const HybridParams& params,
                                                const GaussianProblem& problem) {
  params.validate();
  problem.validate();
  const auto joint = joint_covariance_raw(params, problem);
  bool degenerate = false;
  return compute_margins(joint, kMarginsProofForm, degenerate);
}

std::pair<double, double> uncoded_distortions(const UncodedGains& gains,
                                              const GaussianProblem& problem) {
  problem.validate();
  for (double g : {gains.g10, gains.g11, gains.g20, gains.g22})
    if (!std::isfinite(g)) throw invalid_input("uncoded gains must be finite");
  if (problem.rho01 * problem.rho01 >= 1.0 ||
      problem.rho02 * problem.rho02 >= 1.0)
    throw degenerate_conditioning("uncoded closed form needs |rho0k| < 1");

  const double r01 = problem.rho01, r02 = problem.rho02;
  const double cond = problem.rho12 - r01 * r02;
  const double gs = gains.g10 + gains.g20;
  const double den = gs * gs + gains.g11 * gains.g11 + gains.g22 * gains.g22 +
                     2.0 * gains.g11 * gains.g22 * cond /
                         std::sqrt((1.0 - r01 * r01) * (1.0 - r02 * r02)) +
                     1.0;
  const double num1 = r01 * gs + gains.g11 * std::sqrt(1.0 - r01 * r01) +
                      gains.g22 * cond / std::sqrt(1.0 - r02 * r02);
  const double num2 = r02 * gs + gains.g22 * std::sqrt(1.0 - r02 * r02) +
                      gains.g11 * cond / std::sqrt(1.0 - r01 * r01);
  return {1.0 - num1 * num1 / den, 1.0 - num2 * num2 / den};
}

HybridParams embed_uncoded(const UncodedGains& gains,
                           const GaussianProblem& problem) {
  problem.validate();
  if (problem.rho01 * problem.rho01 >= 1.0 ||
      problem.rho02 * problem.rho02 >= 1.0)
    throw degenerate_basis("uncoded embedding needs |rho0k| < 1");

  HybridParams p;
  p.f1 = {0.0, 0.0, 0.0};
  p.f2 = {0.0, 0.0, 0.0};
  const double b1 = std::sqrt(1.0 - problem.rho01 * problem.rho01);
  const double b2 = std::sqrt(1.0 - problem.rho02 * problem.rho02);
  p.g1 = {gains.g10 - gains.g11 * problem.rho01 / b1, gains.g11 / b1, 0.0, 0.0};
  p.g2 = {gains.g20 - gains.g22 * problem.rho02 / b2, gains.g22 / b2, 0.0, 0.0};
  // A large omega0 keeps the forced common codeword V0 = S0 + W0 from acting
  // as a side channel, so the evaluated distortions match the closed forms.
  p.omega0 = kEmbedOmega0;
  p.omega1 = 1.0;
  p.omega2 = 1.0;
  return p;
}

SimulatedDistortion simulate_uncoded(const GaussianProblem& problem,
                                     const UncodedGains& gains, std::size_t n,
                                     std::uint64_t seed, int threads) {
  if (n < 1) throw invalid_input("sample count must be >= 1");
  problem.validate();
  const auto decomp = conditional_rho(problem);
  const auto [cd1, cd2] = uncoded_distortions(gains, problem);
  (void)cd1;
  (void)cd2;

  // Decoder coefficients of the closed-form MMSE estimator c_k * Y.
  const double r01 = problem.rho01, r02 = problem.rho02;
  const double cond = problem.rho12 - r01 * r02;
  const double gs = gains.g10 + gains.g20;
  const double den = gs * gs + gains.g11 * gains.g11 + gains.g22 * gains.g22 +
                     2.0 * gains.g11 * gains.g22 * cond /
                         std::sqrt((1.0 - r01 * r01) * (1.0 - r02 * r02)) +
                     1.0;
  const double c1 = (r01 * gs + gains.g11 * std::sqrt(1.0 - r01 * r01) +
                     gains.g22 * cond / std::sqrt(1.0 - r02 * r02)) /
                    den;
  const double c2 = (r02 * gs + gains.g22 * std::sqrt(1.0 - r02 * r02) +
                     gains.g11 * cond / std::sqrt(1.0 - r01 * r01)) /
                    den;

  const double a1 = r01, sb1 = std::sqrt(1.0 - r01 * r01);
  const double a2 = r02, sb2 = std::sqrt(1.0 - r02 * r02);
  const double be1 = decomp.beta1,
               ce1 = std::sqrt(std::max(0.0, 1.0 - be1 * be1));
  const double be2 = decomp.beta2,
               ce2 = std::sqrt(std::max(0.0, 1.0 - be2 * be2));

  constexpr std::size_t kBlock = 1 << 16;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> sum1(blocks, 0.0), sum2(blocks, 0.0);
  std::vector<double> sumsq1(blocks, 0.0), sumsq2(blocks, 0.0);

  parallel_for(blocks, threads, [&](std::size_t blk) {
    std::mt19937_64 eng(derive_seed(seed, blk));
    std::normal_distribution<double> nd(0.0, 1.0);
    const std::size_t lo = blk * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double s0 = nd(eng);
      const double uu = nd(eng);
      const double w1 = nd(eng);
      const double w2 = nd(eng);
      const double z = nd(eng);
      const double u1 = be1 * uu + ce1 * w1;
      const double u2 = be2 * uu + ce2 * w2;
      const double s1p = a1 * s0 + sb1 * u1;
      const double s2p = a2 * s0 + sb2 * u2;
      const double y = gains.g10 * s0 + gains.g11 * u1 + gains.g20 * s0 +
                       gains.g22 * u2 + z;
      const double e1 = s1p - c1 * y;
      const double e2 = s2p - c2 * y;
      s1 += e1 * e1;
      s2 += e2 * e2;
      q1 += e1 * e1 * e1 * e1;
      q2 += e2 * e2 * e2 * e2;
    }
    sum1[blk] = s1;
    sum2[blk] = s2;
    sumsq1[blk] = q1;
    sumsq2[blk] = q2;
  });

  double t1 = 0.0, t2 = 0.0, u1 = 0.0, u2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    t1 += sum1[b];
    t2 += sum2[b];
    u1 += sumsq1[b];
    u2 += sumsq2[b];
  }
  SimulatedDistortion out;
  out.n = n;
  const double dn = static_cast<double>(n);
  out.d1 = t1 / dn;
  out.d2 = t2 / dn;
  out.stderr1 = std::sqrt(std::max(0.0, u1 / dn - out.d1 * out.d1) / dn);
  out.stderr2 = std::sqrt(std::max(0.0, u2 / dn - out.d2 * out.d2) / dn);
  return out;
}

UncodedOptimum optimize_uncoded(const GaussianProblem& problem, int resolution,
                                const std::vector<UncodedGains>& extra_starts) {
  problem.validate();
  if (resolution < 2) throw invalid_input("grid resolution must be >= 2");

  const double s1 = std::sqrt(problem.p1), s2 = std::sqrt(problem.p2);
  auto gains_at = [&](double th1, double th2) {
    return UncodedGains{s1 * std::cos(th1), s1 * std::sin(th1),
                        s2 * std::cos(th2), s2 * std::sin(th2)};
  };
  auto score_at = [&](double th1, double th2) {
    const auto [d1, d2] = uncoded_distortions(gains_at(th1, th2), problem);
    return std::max(d1, d2);
  };

  double best1 = M_PI / 2, best2 = M_PI / 2;
  double best = score_at(best1, best2);
  const double step = 2.0 * M_PI / resolution;
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double s = score_at(i * step, j * step);
      if (s < best) {
        best = s;
        best1 = i * step;
        best2 = j * step;
      }
    }
  }
  // Angles matching the requested extra starts (power-saturated projection).
  for (const auto& g : extra_starts) {
    const double th1 = std::atan2(g.g11, g.g10);
    const double th2 = std::atan2(g.g22, g.g20);
    const double s = score_at(th1, th2);
    if (s < best) {
      best = s;
      best1 = th1;
      best2 = th2;
    }
  }

  Eigen::VectorXd x0(2);
  x0 << best1, best2;
  Eigen::VectorXd h(2);
  h << step, step;
  auto refined = pattern_search(
      x0, h, [&](const Eigen::VectorXd& v) { return score_at(v(0), v(1)); },
      6000, 1e-13);

  UncodedOptimum out;
  out.gains = gains_at(refined.x(0), refined.x(1));
  std::tie(out.d1, out.d2) = uncoded_distortions(out.gains, problem);
  return out;
}

std::optional<HybridParams> dithered_uncoded_embedding(
    const UncodedGains& gains, const GaussianProblem& problem,
    double margin_target) {
  if (problem.p1 <= 0.0 || problem.p2 <= 0.0) return std::nullopt;
  if (margin_target <= kHybridMarginSlack)
    throw invalid_input("dither margin target must exceed the strict slack");
  HybridParams base = embed_uncoded(gains, problem);

  // Scale t: each sender diverts dither power t*P_k into its private
  // codeword via g_k4 (omega_k = 1); the signal gains shrink to keep the
  // power budget. Margins grow monotonically with t.
  auto with_dither = [&](double t) {
    HybridParams p = base;
    const double keep1 = std::sqrt(std::max(0.0, 1.0 - t));
    const double keep2 = keep1;
    p.g1[0] *= keep1;
    p.g1[1] *= keep1;
    p.g2[0] *= keep2;
    p.g2[1] *= keep2;
    p.g1[3] = std::sqrt(t * problem.p1);
    p.g2[3] = std::sqrt(t * problem.p2);
    return p;
  };
  auto min_margin = [&](double t) {
    const auto ev = evaluate_hybrid(with_dither(t), problem);
    double m = ev.margins[0];
    for (double v : ev.margins) m = std::min(m, v);
    return m;
  };

  double lo = 0.0, hi = 1e-4;
  if (!(min_margin(hi) > margin_target)) {
    // Either the problem has no usable power or the dither needs to be
    // larger; expand a few times before giving up.
    bool ok = false;
    for (int i = 0; i < 6 && !ok; ++i) {
      hi *= 100.0;
      if (hi > 0.9) hi = 0.9;
      ok = min_margin(hi) > margin_target;
    }
    if (!ok) return std::nullopt;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (min_margin(mid) > margin_target)
      hi = mid;
    else
      lo = mid;
    if (hi - lo < 1e-18 || (lo > 0.0 && (hi - lo) / lo < 1e-6)) break;
  }
  HybridParams p = with_dither(hi);
  const auto ev = evaluate_hybrid(p, problem);
  if (!ev.feasible) return std::nullopt;
  return p;
}

namespace {

// 17-dim search vector: f1, f2, g1, g2, log-omega triple.
Eigen::VectorXd pack(const HybridParams& p) {
  Eigen::VectorXd x(17);
  for (int i = 0; i < 3; ++i) x(i) = p.f1[i];
  for (int i = 0; i < 3; ++i) x(3 + i) = p.f2[i];
  for (int i = 0; i < 4; ++i) x(6 + i) = p.g1[i];
  for (int i = 0; i < 4; ++i) x(10 + i) = p.g2[i];
  x(14) = std::log(std::max(p.omega0, 1e-30));
  x(15) = std::log(std::max(p.omega1, 1e-30));
  x(16) = std::log(std::max(p.omega2, 1e-30));
  return x;
}

HybridParams unpack(const Eigen::VectorXd& x) {
  HybridParams p;
  for (int i = 0; i < 3; ++i) p.f1[i] = x(i);
  for (int i = 0; i < 3; ++i) p.f2[i] = x(3 + i);
  for (int i = 0; i < 4; ++i) p.g1[i] = x(6 + i);
  for (int i = 0; i < 4; ++i) p.g2[i] = x(10 + i);
  p.omega0 = std::exp(std::clamp(x(14), -40.0, 40.0));
  p.omega1 = std::exp(std::clamp(x(15), -40.0, 40.0));
  p.omega2 = std::exp(std::clamp(x(16), -40.0, 40.0));
  return p;
}

struct Scored {
  HybridParams params;
  HybridEvaluation eval;
  double score = std::numeric_limits<double>::infinity();
};

double scalarize(const HybridEvaluation& ev, const HybridSearchOptions& opt) {
  switch (opt.objective) {
    case HybridObjective::SymmetricMax:
      return std::max(ev.d1, ev.d2);
    case HybridObjective::Targets:
      return std::max(ev.d1 - opt.target_d1, ev.d2 - opt.target_d2);
    case HybridObjective::Weighted:
      return ev.d1 + opt.lambda * ev.d2;
  }
  return std::max(ev.d1, ev.d2);
}

}  // namespace

HybridSearchResult optimize_hybrid(const GaussianProblem& problem,
                                   const HybridSearchOptions& options) {
  problem.validate();
  if (options.budget < 1) throw invalid_input("optimizer budget must be >= 1");

  // Power projection: G_k powers scale quadratically, so the factor comes
  // straight from the unprojected evaluation.
  auto canonicalize = [&](HybridParams p) {
    const auto joint = joint_covariance_raw(p, problem);
    const double pw1 = power_of(joint, p.g1, S1);
    const double pw2 = power_of(joint, p.g2, S2);
    if (pw1 > problem.p1 && pw1 > 0.0) {
      const double c = std::sqrt(problem.p1 / pw1);
      for (auto& g : p.g1) g *= c;
    }
    if (pw2 > problem.p2 && pw2 > 0.0) {
      const double c = std::sqrt(problem.p2 / pw2);
      for (auto& g : p.g2) g *= c;
    }
    return p;
  };

  auto score_params = [&](const HybridParams& p) {
    Scored s;
    s.params = canonicalize(p);
    try {
      s.eval = evaluate_hybrid(s.params, problem);
    } catch (const std::exception&) {
      s.score = 1e12;
      return s;
    }
    if (s.eval.feasible) {
      s.score = scalarize(s.eval, options);
    } else {
      double violation = 0.0;
      for (double m : s.eval.margins) {
        if (std::isnan(m))
          violation += 100.0;
        else
          violation += std::min(100.0, std::max(0.0, kHybridMarginSlack - m));
      }
      violation += std::max(0.0, s.eval.power1 - problem.p1) /
                   std::max(1.0, problem.p1);
      violation += std::max(0.0, s.eval.power2 - problem.p2) /
                   std::max(1.0, problem.p2);
      s.score = 10.0 + violation;
    }
    return s;
  };

  // Assemble the start list.
  std::vector<HybridParams> starts;
  if (options.uncoded_start) {
    if (auto d = dithered_uncoded_embedding(*options.uncoded_start, problem))
      starts.push_back(*d);
    try {
      starts.push_back(embed_uncoded(*options.uncoded_start, problem));
    } catch (const degenerate_basis&) {
    }
  }
  for (const auto& p : options.extra_starts) starts.push_back(p);
  const std::size_t gentle = starts.size();  // boundary points: probe softly

  // Generic analog-plus-dither starts; these need no source decomposition,
  // so they also cover the degenerate |rho0k| = 1 problems.
  if (problem.p1 > 0.0 && problem.p2 > 0.0) {
    const double t = 1e-6;
    for (int column : {0, 1}) {
      HybridParams p;
      p.f1 = p.f2 = {0.0, 0.0, 0.0};
      p.g1 = {0.0, 0.0, 0.0, std::sqrt(t * problem.p1)};
      p.g2 = {0.0, 0.0, 0.0, std::sqrt(t * problem.p2)};
      p.g1[column] = std::sqrt((1.0 - t) * problem.p1);
      p.g2[column] = std::sqrt((1.0 - t) * problem.p2);
      p.omega0 = kEmbedOmega0;
      p.omega1 = 1.0;
      p.omega2 = 1.0;
      starts.push_back(p);
    }

    // Digital-layered presets: private codewords quantize the sources and
    // ride on a share of the power, superimposed on the analog part. The
    // sign-flipped variant matters when the conditional correlation is
    // negative.
    for (double share : {0.25, 0.5, 0.75}) {
      for (double sign : {+1.0, -1.0}) {
        if (sign < 0.0 && share != 0.5) continue;
        HybridParams p;
        p.f1 = {0.0, 1.0, 0.0};
        p.f2 = {0.0, 1.0, 0.0};
        p.omega0 = kEmbedOmega0;
        p.omega1 = 0.5;
        p.omega2 = 0.5;
        const double vvar = 1.0 + p.omega1;
        p.g1 = {0.0, std::sqrt((1.0 - share) * problem.p1), 0.0,
                std::sqrt(share * problem.p1 / vvar)};
        p.g2 = {0.0, sign * std::sqrt((1.0 - share) * problem.p2), 0.0,
                sign * std::sqrt(share * problem.p2 / vvar)};
        starts.push_back(p);
      }
    }
  }

  const std::size_t structured = starts.size();
  const std::size_t per_start_budget = 3000;
  std::size_t n_random = options.budget > structured * per_start_budget
                             ? (options.budget - structured * per_start_budget +
                                per_start_budget - 1) /
                                   per_start_budget
                             : 1;
  n_random = std::min<std::size_t>(n_random, 64);
  (void)structured;

  const double gscale = std::sqrt(std::max({problem.p1, problem.p2, 1.0}));
  for (std::size_t r = 0; r < n_random; ++r) {
    std::mt19937_64 eng(derive_seed(options.seed, 1000 + r));
    std::uniform_real_distribution<double> uf(-1.5, 1.5);
    std::uniform_real_distribution<double> ug(-gscale, gscale);
    std::uniform_real_distribution<double> uo(-3.0, 3.0);
    HybridParams p;
    for (auto& v : p.f1) v = uf(eng);
    for (auto& v : p.f2) v = uf(eng);
    for (auto& v : p.g1) v = ug(eng);
    for (auto& v : p.g2) v = ug(eng);
    p.omega0 = std::exp(uo(eng));
    p.omega1 = std::exp(uo(eng));
    p.omega2 = std::exp(uo(eng));
    starts.push_back(p);
  }

  const std::size_t n_starts = starts.size();
  const std::size_t budget_each =
      std::max<std::size_t>(64, options.budget / std::max<std::size_t>(1, n_starts));

  std::vector<Scored> results(n_starts);
  std::vector<std::size_t> evals(n_starts, 0);
  parallel_for(n_starts, options.threads, [&](std::size_t i) {
    Eigen::VectorXd x0 = pack(starts[i]);
    Eigen::VectorXd h(17);
    for (int k = 0; k < 6; ++k) h(k) = 0.25;
    for (int k = 6; k < 14; ++k) h(k) = 0.25 * gscale;
    for (int k = 14; k < 17; ++k) h(k) = 0.5;
    // Boundary-hugging starts: probe gently so the first sweep does not
    // jump off the feasible set.
    if (i < gentle) h *= 1e-3;
    auto st = pattern_search(
        x0, h,
        [&](const Eigen::VectorXd& v) { return score_params(unpack(v)).score; },
        budget_each, 1e-13);
    results[i] = score_params(unpack(st.x));
    evals[i] = st.evaluations;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < n_starts; ++i)
    if (results[i].score < results[best].score) best = i;

  // Polish the champion with a fresh fine-step search.
  {
    Eigen::VectorXd x0 = pack(results[best].params);
    Eigen::VectorXd h = Eigen::VectorXd::Constant(17, 1e-3);
    auto st = pattern_search(
        x0, h,
        [&](const Eigen::VectorXd& v) { return score_params(unpack(v)).score; },
        std::max<std::size_t>(2000, options.budget / 8), 1e-14);
    const Scored polished = score_params(unpack(st.x));
    if (polished.score <= results[best].score) results[best] = polished;
    evals[best] += st.evaluations;
  }

  HybridSearchResult out;
  out.params = results[best].params;
  out.evaluation = results[best].eval;
  out.found_feasible = results[best].eval.feasible;
  out.objective = results[best].score;
  for (std::size_t e : evals) out.evaluations += e;

  if (!out.found_feasible) {
    // Nothing strictly feasible: report the silent scheme (no transmission,
    // mean reconstruction), which is always available outside the region.
    HybridParams silent;
    silent.f1 = silent.f2 = {0.0, 0.0, 0.0};
    silent.g1 = silent.g2 = {0.0, 0.0, 0.0, 0.0};
    silent.omega0 = kEmbedOmega0;
    out.params = silent;
    out.evaluation = evaluate_hybrid(silent, problem);
    out.objective = scalarize(out.evaluation, options);
  }
  return out;
}

}  // namespace macbounds
