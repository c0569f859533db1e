#include <doctest.h>

#include <cmath>
#include <random>

#include "macbounds/common.hpp"
#include "macbounds/outer.hpp"

using namespace macbounds;

namespace {
GaussianProblem fig3(double p) { return {0.8, 0.8, 0.3, p, p}; }

OuterGridConfig coarse_grid() {
  OuterGridConfig g;
  g.rho_hat_points = 41;
  g.rho_hat0_points = 21;
  g.beta_points = 21;
  g.theta_scan_points = 17;
  g.theta_refine_iters = 24;
  return g;
}
}  // namespace

TEST_CASE("rd_joint: unit distortions cost nothing") {
  const auto r = rd_joint(1.0, 1.0, 0.5);
  CHECK(!r.infinite);
  CHECK(r.rate == doctest::Approx(0.0));
}

TEST_CASE("rd_joint: independent case at d = 0.25 equals log 4") {
  const auto r = rd_joint(0.25, 0.25, 0.0);
  CHECK(r.rate == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("rd_joint: zero distortion flags an infinite rate") {
  CHECK(rd_joint(0.0, 0.5, 0.3).infinite);
}

TEST_CASE("rd_joint: argument order does not matter") {
  CHECK(rd_joint(0.13, 0.77, 0.45).rate ==
        doctest::Approx(rd_joint(0.77, 0.13, 0.45).rate).epsilon(1e-15));
}

TEST_CASE("rd_joint: continuity across both case boundaries") {
  std::mt19937_64 eng(17);
  std::uniform_real_distribution<double> ud(0.05, 0.95);
  for (int k = 0; k < 50; ++k) {
    double d1 = ud(eng), d2 = ud(eng);
    if (d1 > d2) std::swap(d1, d2);

    // Boundary between cases 2 and 3: rho^2 = (1-d1)(1-d2).
    const double rho_23 = std::sqrt((1.0 - d1) * (1.0 - d2));
    CHECK(rd_joint_case(2, d1, d2, rho_23) ==
          doctest::Approx(rd_joint_case(3, d1, d2, rho_23)).epsilon(1e-9));

    // Boundary between cases 3 and 1: rho^2 = (1-d2)/(1-d1).
    const double q = (1.0 - d2) / (1.0 - d1);
    if (q <= 1.0) {
      const double rho_31 = std::sqrt(q);
      CHECK(rd_joint_case(3, d1, d2, rho_31) ==
            doctest::Approx(rd_joint_case(1, d1, d2, rho_31)).epsilon(1e-9));
    }
  }
}

TEST_CASE("rd_joint: monotone non-increasing in each distortion") {
  std::mt19937_64 eng(29);
  std::uniform_real_distribution<double> ud(0.02, 1.0);
  std::uniform_real_distribution<double> ur(-0.99, 0.99);
  for (int k = 0; k < 10000; ++k) {
    const double d1 = ud(eng), d2 = ud(eng), rho = ur(eng);
    const double base = rd_joint(d1, d2, rho).rate;
    const double delta = 0.01 + 0.2 * ud(eng);
    CHECK(rd_joint(d1 + delta, d2, rho).rate <= base + 1e-12);
    CHECK(rd_joint(d1, d2 + delta, rho).rate <= base + 1e-12);
  }
}

TEST_CASE("rd_joint_given_common: reduces exactly when rho0k = 0") {
  GaussianProblem p{0.0, 0.0, 0.37, 1.0, 1.0};
  for (double d1 : {0.1, 0.4, 0.9}) {
    for (double d2 : {0.2, 0.8}) {
      CHECK(rd_joint_given_common(d1, d2, p).rate ==
            doctest::Approx(rd_joint(d1, d2, 0.37).rate).epsilon(1e-15));
    }
  }
}

TEST_CASE("rd_joint_given_common: substitution arithmetic at the reference point") {
  const auto p = fig3(1.0);
  const double d = 0.2;
  const double dprime = d / 0.36;
  const double rc = -0.34 / 0.36;
  CHECK(rd_joint_given_common(d, d, p).rate ==
        doctest::Approx(rd_joint(dprime, dprime, rc).rate).epsilon(1e-12));
}

TEST_CASE("rd_joint_given_common: d = 1 - rho0k^2 reaches rate zero") {
  const auto p = fig3(1.0);
  CHECK(rd_joint_given_common(0.36, 0.36, p).rate == doctest::Approx(0.0));
}

TEST_CASE("check_constraints: all margins nonnegative at (1,1) with zero witness") {
  const auto p = fig3(1.0);
  OuterWitnessPoint w;
  w.rho_hat = 0.0;
  w.rho_hat0 = 0.0;
  w.beta1 = 1.0;
  w.theta1 = 0.0;
  w.theta2 = 0.0;
  const auto m = check_constraints(1.0, 1.0, p, w);
  for (double v : m) CHECK(v >= -1e-12);
}

TEST_CASE("check_constraints: no power forces the first margin negative") {
  GaussianProblem p{0.8, 0.8, 0.3, 0.0, 0.0};
  OuterWitnessPoint w;
  w.rho_hat = 1.0;
  w.rho_hat0 = std::abs(-0.34 / 0.36);
  w.beta1 = 1.0;
  w.theta1 = w.theta2 = 1.0;
  const auto m = check_constraints(0.01, 0.01, p, w);
  CHECK(m[0] < 0.0);
}

TEST_CASE("check_constraints: rho0 = 0 coincides with the no-common-part form") {
  // With rho01 = rho02 = 0 every constraint collapses onto the bound with
  // the common coordinate dropped; transcribe that form directly.
  GaussianProblem p{0.0, 0.0, 0.45, 2.0, 2.0};
  const double d1 = 0.3, d2 = 0.5, rho = 0.45;
  OuterWitnessPoint w;
  w.rho_hat = 0.4;
  w.rho_hat0 = 0.3;
  w.beta1 = 0.8;
  w.theta1 = 0.7;
  w.theta2 = w.rho_hat / w.theta1;
  const auto m = check_constraints(d1, d2, p, w);

  const double rate = rd_joint(d1, d2, rho).rate;
  const double rhs1 = 0.5 * std::log(1.0 + 4.0 + 2.0 * w.rho_hat * 2.0);
  CHECK(m[0] == doctest::Approx(rhs1 - rate).epsilon(1e-12));
  const double factor =
      std::min((1.0 - w.rho_hat * w.rho_hat) / (1.0 - rho * rho), 1.0);
  const double rhs2 =
      0.5 * std::log(1.0 + factor * (4.0 + 2.0 * w.rho_hat0 * 2.0));
  CHECK(m[1] == doctest::Approx(rhs2 - rate).epsilon(1e-12));

  const double cap = std::min(1.0 - w.rho_hat * w.rho_hat,
                              1.0 - w.rho_hat0 * w.rho_hat0);
  CHECK(m[2] == doctest::Approx(1.0 + cap * 2.0 - (1.0 - rho * rho) / d1)
                    .epsilon(1e-12));
  CHECK(m[3] == doctest::Approx(1.0 + cap * 2.0 - (1.0 - rho * rho) / d2)
                    .epsilon(1e-12));

  const double beta2 = rho / w.beta1;
  const double q1 = (w.rho_hat0 / beta2) * (w.rho_hat0 / beta2);
  const double q2 = (w.rho_hat0 / w.beta1) * (w.rho_hat0 / w.beta1);
  const double lhs6 = (1.0 - w.beta1 * w.beta1) / d1;
  const double lhs7 = (1.0 - beta2 * beta2) / d2;
  const double theta_branch = (1.0 - w.theta1 * w.theta1) * 2.0 +
                              (1.0 - w.theta2 * w.theta2) * 2.0;
  CHECK(m[4] == doctest::Approx(1.0 +
                                std::min(theta_branch,
                                         (1.0 - q1) * 2.0 + (1.0 - q2) * 2.0) -
                                std::max(lhs6, 1.0) * std::max(lhs7, 1.0))
                    .epsilon(1e-12));
  CHECK(m[5] == doctest::Approx(1.0 +
                                std::min(1.0 - w.theta1 * w.theta1, 1.0 - q1) *
                                    2.0 -
                                lhs6)
                    .epsilon(1e-12));
  CHECK(m[6] == doctest::Approx(1.0 +
                                std::min(1.0 - w.theta2 * w.theta2, 1.0 - q2) *
                                    2.0 -
                                lhs7)
                    .epsilon(1e-12));
}

TEST_CASE("outer_membership: (1,1) is always a member") {
  const auto res = outer_membership(1.0, 1.0, fig3(1.0), coarse_grid(), 2);
  CHECK(res.verdict.member);
  REQUIRE(res.witness.has_value());
  for (const auto& b : res.witness->per_beta)
    CHECK(res.witness->rho_hat <= b.theta1 * b.theta2 + 1e-12);
}

TEST_CASE("outer_membership: tiny distortions at P = 1 violate the sum rate") {
  const auto res = outer_membership(1e-6, 1e-6, fig3(1.0), coarse_grid(), 2);
  CHECK(!res.verdict.member);
  CHECK(res.verdict.violated_constraint == "sum_rate");
}

TEST_CASE("outer_membership: monotone in the distortion pair") {
  std::mt19937_64 eng(31);
  std::uniform_real_distribution<double> ud(0.05, 0.6);
  const auto grid = coarse_grid();
  for (int k = 0; k < 6; ++k) {
    GaussianProblem p = fig3(0.5 + 0.7 * k);
    const double d1 = ud(eng), d2 = ud(eng), delta = 0.15;
    const bool inner = outer_membership(d1, d2, p, grid, 2).verdict.member;
    const bool outer =
        outer_membership(d1 + delta, d2 + delta, p, grid, 2).verdict.member;
    if (inner) CHECK(outer);
  }
}

TEST_CASE("symmetric bisection: P -> infinity drives D to zero") {
  GaussianProblem p = fig3(1e6);
  const double d = symmetric_outer_min_distortion(p, coarse_grid(), 1e-5, 2);
  CHECK(d < 5e-4);
}

TEST_CASE("symmetric bisection: zero power floors at the zero-rate distortion") {
  GaussianProblem p = fig3(0.0);
  const double d = symmetric_outer_min_distortion(p, coarse_grid(), 1e-5, 2);
  // R_{S1S2}(D,D) <= 0 forces D at least the zero-rate point of the
  // symmetric rate function: (1 - rho12^2)/D^2 <= 1 or the second branch.
  CHECK(d > 0.5);
  const double rate = rd_joint(d + 1e-4, d + 1e-4, 0.3).rate;
  CHECK(rate == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("corollary transcription agrees with the general machinery") {
  const auto grid = coarse_grid();
  for (double p : {0.5, 2.0, 8.0}) {
    const auto prob = fig3(p);
    for (double d : {0.05, 0.15, 0.3, 0.6, 0.9}) {
      const bool general =
          outer_membership(d, d, prob, grid, 2).verdict.member;
      const bool corollary = cor1_symmetric_membership(prob, d, grid, 2);
      CHECK(general == corollary);
    }
  }
}
