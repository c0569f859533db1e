#include "macbounds/outer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "macbounds/common.hpp"
#include "macbounds/parallel.hpp"

namespace macbounds {

namespace {

inline double log_plus(double x) { return std::max(std::log(x), 0.0); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  if (n <= 1 || hi <= lo) {
    v.push_back(lo);
    if (hi > lo) v.push_back(hi);
    return v;
  }
  v.reserve(n);
  for (int i = 0; i < n; ++i)
    v.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  return v;
}

// rho_hat0^2 / beta^2 with the 0/0 -> 0 convention at rho12|0 = 0.
inline double ratio_sq(double rho_hat0, double beta) {
  if (rho_hat0 == 0.0) return 0.0;
  const double r = rho_hat0 / beta;
  return r * r;
}

}  // namespace

double rd_joint_case(int which, double d1, double d2, double rho12) {
  const double r2 = rho12 * rho12;
  switch (which) {
    case 1:
      return 0.5 * log_plus(1.0 / d1);
    case 2:
      return 0.5 * log_plus((1.0 - r2) / (d1 * d2));
    case 3: {
      const double gap = std::abs(rho12) - std::sqrt((1.0 - d1) * (1.0 - d2));
      return 0.5 * log_plus((1.0 - r2) / (d1 * d2 - gap * gap));
    }
    default:
      throw invalid_input("rd_joint_case expects case 1, 2 or 3");
  }
}

RdRate rd_joint(double d1, double d2, double rho12) {
  RdRate out;
  if (!(d1 > 0.0) || !(d2 > 0.0)) {
    out.infinite = true;
    out.rate = std::numeric_limits<double>::infinity();
    return out;
  }
  // Distortion above the source variance is free.
  d1 = std::min(d1, 1.0);
  d2 = std::min(d2, 1.0);
  if (d1 > d2) std::swap(d1, d2);

  const double r2 = rho12 * rho12;
  if (r2 * (1.0 - d1) >= 1.0 - d2)
    out.rate = rd_joint_case(1, d1, d2, rho12);
  else if (r2 <= (1.0 - d1) * (1.0 - d2))
    out.rate = rd_joint_case(2, d1, d2, rho12);
  else
    out.rate = rd_joint_case(3, d1, d2, rho12);
  return out;
}

RdRate rd_joint_given_common(double d1, double d2,
                             const GaussianProblem& problem) {
  const auto decomp = conditional_rho(problem);
  const double d1p = d1 / (1.0 - problem.rho01 * problem.rho01);
  const double d2p = d2 / (1.0 - problem.rho02 * problem.rho02);
  return rd_joint(d1p, d2p, decomp.rho12_given_0);
}

std::array<double, 7> check_constraints(double d1, double d2,
                                        const GaussianProblem& problem,
                                        const OuterWitnessPoint& w) {
  const auto decomp = conditional_rho(problem);
  const double rc = decomp.rho12_given_0;
  const double rc2 = rc * rc;
  const double p1 = problem.p1, p2 = problem.p2;
  const double sp = std::sqrt(p1 * p2);
  const double v01 = 1.0 - problem.rho01 * problem.rho01;
  const double v02 = 1.0 - problem.rho02 * problem.rho02;
  const double beta2 = w.beta1 == 0.0 ? 0.0 : rc / w.beta1;

  std::array<double, 7> m{};

  {
    const RdRate r = rd_joint(d1, d2, problem.rho12);
    const double rhs =
        0.5 * std::log(1.0 + p1 + p2 + 2.0 * w.rho_hat * sp);
    m[0] = r.infinite ? -std::numeric_limits<double>::infinity()
                      : rhs - r.rate;
  }
  {
    const RdRate r = rd_joint_given_common(d1, d2, problem);
    const double factor =
        rc2 >= 1.0 ? 1.0
                   : std::min((1.0 - w.rho_hat * w.rho_hat) / (1.0 - rc2), 1.0);
    const double rhs =
        0.5 * std::log(1.0 + factor * (p1 + p2 + 2.0 * w.rho_hat0 * sp));
    m[1] = r.infinite ? -std::numeric_limits<double>::infinity()
                      : rhs - r.rate;
  }
  const double cap = std::min(1.0 - w.rho_hat * w.rho_hat,
                              1.0 - w.rho_hat0 * w.rho_hat0);
  m[2] = 1.0 + cap * p1 -
         (d1 > 0.0 ? v01 * (1.0 - rc2) / d1
                   : std::numeric_limits<double>::infinity());
  m[3] = 1.0 + cap * p2 -
         (d2 > 0.0 ? v02 * (1.0 - rc2) / d2
                   : std::numeric_limits<double>::infinity());

  const double lhs6 = d1 > 0.0 ? v01 * (1.0 - w.beta1 * w.beta1) / d1
                               : std::numeric_limits<double>::infinity();
  const double lhs7 = d2 > 0.0 ? v02 * (1.0 - beta2 * beta2) / d2
                               : std::numeric_limits<double>::infinity();
  const double q1 = ratio_sq(w.rho_hat0, beta2);  // rho_hat0^2 / beta2^2
  const double q2 = ratio_sq(w.rho_hat0, w.beta1);

  m[4] = 1.0 +
         std::min((1.0 - w.theta1 * w.theta1) * p1 +
                      (1.0 - w.theta2 * w.theta2) * p2,
                  (1.0 - q1) * p1 + (1.0 - q2) * p2) -
         std::max(lhs6, 1.0) * std::max(lhs7, 1.0);
  m[5] = 1.0 + std::min(1.0 - w.theta1 * w.theta1, 1.0 - q1) * p1 - lhs6;
  m[6] = 1.0 + std::min(1.0 - w.theta2 * w.theta2, 1.0 - q2) * p2 - lhs7;
  return m;
}

namespace {

// Best min(m5, m6, m7) over theta on the boundary theta1 theta2 = rho_hat.
// Every theta-dependent right-hand side shrinks as theta grows, so only the
// boundary matters. Coarse scan plus golden-section refinement.
struct ThetaSearch {
  double theta1 = 0.0, theta2 = 0.0;
  double min_margin = -std::numeric_limits<double>::infinity();
};

template <typename MarginFn>
ThetaSearch theta_line_search(double rho_hat, const MarginFn& margin_at,
                              int scan_points, int refine_iters) {
  ThetaSearch best;
  if (rho_hat <= 0.0) {
    best.theta1 = 0.0;
    best.theta2 = 0.0;
    best.min_margin = margin_at(0.0, 0.0);
    return best;
  }
  auto eval = [&](double t1) {
    const double t2 = rho_hat / t1;
    return margin_at(t1, t2);
  };
  const double lo = rho_hat, hi = 1.0;
  if (hi - lo < 1e-15) {
    best.theta1 = 1.0;
    best.theta2 = rho_hat;
    best.min_margin = eval(1.0);
    return best;
  }
  int besti = 0;
  double bestv = -std::numeric_limits<double>::infinity();
  const int n = std::max(scan_points, 3);
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    const double v = eval(t);
    if (v > bestv) {
      bestv = v;
      besti = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, besti - 1) / double(n - 1);
  double b = lo + (hi - lo) * std::min(n - 1, besti + 1) / double(n - 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < refine_iters; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = eval(x2);
    }
  }
  const double t = f1 >= f2 ? x1 : x2;
  const double v = std::max(f1, f2);
  if (v >= bestv) {
    best.theta1 = t;
    best.theta2 = rho_hat / t;
    best.min_margin = v;
  } else {
    best.theta1 = lo + (hi - lo) * besti / double(n - 1);
    best.theta2 = rho_hat / best.theta1;
    best.min_margin = bestv;
  }
  return best;
}

struct CandidateOutcome {
  bool pass = false;
  double tightest = -std::numeric_limits<double>::infinity();
  int violated = -1;
  std::vector<BetaRecord> per_beta;
};

}  // namespace

OuterMembership outer_membership(double d1, double d2,
                                 const GaussianProblem& problem,
                                 const OuterGridConfig& grid, int threads) {
  problem.validate();
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw invalid_input("membership requires positive distortions");

  const auto decomp = conditional_rho(problem);
  const double r = std::abs(decomp.rho12_given_0);
  const auto rho_hats = linspace(0.0, 1.0, grid.rho_hat_points);
  const auto rho_hat0s = linspace(0.0, r, grid.rho_hat0_points);
  const auto betas = linspace(r, 1.0, grid.beta_points);

  // RD terms are witness-independent; margins 1-4 are beta/theta-independent.
  const std::size_t total = rho_hats.size() * rho_hat0s.size();

  auto evaluate_candidate = [&](std::size_t flat) {
    CandidateOutcome out;
    OuterWitnessPoint w;
    w.rho_hat = rho_hats[flat / rho_hat0s.size()];
    w.rho_hat0 = rho_hat0s[flat % rho_hat0s.size()];
    out.tightest = std::numeric_limits<double>::infinity();

    // Constraints 1-4 at a representative beta.
    w.beta1 = betas.front();
    w.theta1 = w.theta2 = 1.0;
    const auto base = check_constraints(d1, d2, problem, w);
    for (int c = 0; c < 4; ++c) {
      out.tightest = std::min(out.tightest, base[c]);
      if (base[c] < 0.0) {
        out.violated = c;
        return out;
      }
    }

    for (double beta : betas) {
      auto margin_at = [&](double t1, double t2) {
        OuterWitnessPoint ww = w;
        ww.beta1 = beta;
        ww.theta1 = t1;
        ww.theta2 = t2;
        const auto mm = check_constraints(d1, d2, problem, ww);
        return std::min({mm[4], mm[5], mm[6]});
      };
      const auto ts = theta_line_search(w.rho_hat, margin_at,
                                        grid.theta_scan_points,
                                        grid.theta_refine_iters);
      out.tightest = std::min(out.tightest, ts.min_margin);
      if (ts.min_margin < 0.0) {
        // Identify which of 5-7 is tightest for the report.
        OuterWitnessPoint ww = w;
        ww.beta1 = beta;
        ww.theta1 = ts.theta1;
        ww.theta2 = ts.theta2;
        const auto mm = check_constraints(d1, d2, problem, ww);
        out.violated = 4;
        double worst = mm[4];
        for (int c = 5; c < 7; ++c)
          if (mm[c] < worst) {
            worst = mm[c];
            out.violated = c;
          }
        return out;
      }
      out.per_beta.push_back({beta, ts.theta1, ts.theta2, ts.min_margin});
    }
    out.pass = true;
    return out;
  };

  OuterMembership result;
  double best_fail = -std::numeric_limits<double>::infinity();
  int best_fail_constraint = 0;

  constexpr std::size_t kChunk = 256;
  for (std::size_t chunk = 0; chunk < total; chunk += kChunk) {
    const std::size_t hi = std::min(total, chunk + kChunk);
    std::vector<CandidateOutcome> outcomes(hi - chunk);
    parallel_for(hi - chunk, threads, [&](std::size_t k) {
      outcomes[k] = evaluate_candidate(chunk + k);
    });
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      auto& oc = outcomes[k];
      if (oc.pass) {
        const std::size_t flat = chunk + k;
        result.verdict.member = true;
        result.verdict.tightest_margin = oc.tightest;
        OuterWitness wit;
        wit.rho_hat = rho_hats[flat / rho_hat0s.size()];
        wit.rho_hat0 = rho_hat0s[flat % rho_hat0s.size()];
        wit.per_beta = std::move(oc.per_beta);
        result.witness = std::move(wit);
        return result;
      }
      if (oc.tightest > best_fail) {
        best_fail = oc.tightest;
        best_fail_constraint = oc.violated < 0 ? 0 : oc.violated;
      }
    }
  }

  result.verdict.member = false;
  result.verdict.tightest_margin = best_fail;
  result.verdict.violated_constraint =
      kOuterConstraintNames[best_fail_constraint];
  return result;
}

double symmetric_outer_min_distortion(const GaussianProblem& problem,
                                      const OuterGridConfig& grid, double tol,
                                      int threads) {
  problem.validate();
  if (problem.p1 != problem.p2)
    throw invalid_input("symmetric bisection requires p1 == p2");

  auto member = [&](double d) {
    return outer_membership(d, d, problem, grid, threads).verdict.member;
  };
  double hi = 1.0;
  if (!member(hi)) return 1.0;  // conservative cap; (1,1) is always a member
  double lo = 1e-9;
  if (member(lo)) return lo;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (member(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

bool cor1_symmetric_membership(const GaussianProblem& problem, double d,
                               const OuterGridConfig& grid, int threads) {
  problem.validate();
  if (problem.p1 != problem.p2 || problem.rho01 != problem.rho02)
    throw invalid_input("corollary check requires the symmetric case");
  if (!(d > 0.0)) throw invalid_input("corollary check requires d > 0");
  const double p = problem.p1;

  const auto decomp = conditional_rho(problem);
  const double rc = decomp.rho12_given_0;
  const double rc2 = rc * rc;
  const double r = std::abs(rc);
  const double v01 = 1.0 - problem.rho01 * problem.rho01;
  const double v02 = 1.0 - problem.rho02 * problem.rho02;

  // Symmetric-case rate functions, transcribed from the corollary displays.
  auto r_sym = [&](double dd) {
    const double ar = std::abs(problem.rho12);
    if (ar <= 1.0 - dd)
      return 0.5 * log_plus((1.0 - ar * ar) / (dd * dd));
    return 0.5 * log_plus((1.0 + ar) / (2.0 * dd - (1.0 - ar)));
  };
  auto r_sym_cond = [&](double dd) {
    const double dp = dd / v01;
    if (r <= 1.0 - dp) return 0.5 * log_plus((1.0 - rc2) / (dp * dp));
    return 0.5 * log_plus((1.0 + r) / (2.0 * dp - (1.0 - r)));
  };

  const double rate1 = r_sym(d);
  const double rate2 = r_sym_cond(d);

  const auto rho_hats = linspace(0.0, 1.0, grid.rho_hat_points);
  const auto rho_hat0s = linspace(0.0, r, grid.rho_hat0_points);
  const auto betas = linspace(r, 1.0, grid.beta_points);
  const std::size_t total = rho_hats.size() * rho_hat0s.size();

  auto candidate_passes = [&](std::size_t flat) {
    const double rho_hat = rho_hats[flat / rho_hat0s.size()];
    const double rho_hat0 = rho_hat0s[flat % rho_hat0s.size()];

    if (rate1 > 0.5 * std::log(1.0 + 2.0 * (1.0 + rho_hat) * p)) return false;
    const double factor =
        rc2 >= 1.0 ? 1.0 : std::min((1.0 - rho_hat * rho_hat) / (1.0 - rc2), 1.0);
    if (rate2 >
        0.5 * std::log(1.0 + factor * 2.0 * (1.0 + rho_hat0) * p))
      return false;
    const double cap =
        std::min(1.0 - rho_hat * rho_hat, 1.0 - rho_hat0 * rho_hat0);
    if (v01 * (1.0 - rc2) / d > 1.0 + cap * p) return false;
    if (v02 * (1.0 - rc2) / d > 1.0 + cap * p) return false;

    for (double beta1 : betas) {
      const double beta2 = beta1 == 0.0 ? 0.0 : rc / beta1;
      const double q1 = ratio_sq(rho_hat0, beta2);
      const double q2 = ratio_sq(rho_hat0, beta1);
      const double lhs6 = v01 * (1.0 - beta1 * beta1) / d;
      const double lhs7 = v02 * (1.0 - beta2 * beta2) / d;
      auto margin_at = [&](double t1, double t2) {
        const double m5 =
            1.0 +
            std::min((2.0 - t1 * t1 - t2 * t2) * p, (2.0 - q1 - q2) * p) -
            std::max(lhs6, 1.0) * std::max(lhs7, 1.0);
        const double m6 = 1.0 + std::min(1.0 - t1 * t1, 1.0 - q1) * p - lhs6;
        const double m7 = 1.0 + std::min(1.0 - t2 * t2, 1.0 - q2) * p - lhs7;
        return std::min({m5, m6, m7});
      };
      const auto ts = theta_line_search(rho_hat, margin_at,
                                        grid.theta_scan_points,
                                        grid.theta_refine_iters);
      if (ts.min_margin < 0.0) return false;
    }
    return true;
  };

  std::atomic<bool> found{false};
  constexpr std::size_t kChunk = 256;
  for (std::size_t chunk = 0; chunk < total && !found.load(); chunk += kChunk) {
    const std::size_t hi = std::min(total, chunk + kChunk);
    std::vector<char> pass(hi - chunk, 0);
    parallel_for(hi - chunk, threads, [&](std::size_t k) {
      pass[k] = candidate_passes(chunk + k) ? 1 : 0;
    });
    for (char c : pass)
      if (c) found.store(true);
  }
  return found.load();
}

}  // namespace macbounds
