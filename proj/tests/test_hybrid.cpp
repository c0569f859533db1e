#include <doctest.h>

#include <cmath>
#include <random>

#include "macbounds/common.hpp"
#include "macbounds/gaussian.hpp"
#include "macbounds/hybrid.hpp"
#include "macbounds/labeled_covariance.hpp"

using namespace macbounds;

namespace {

GaussianProblem fig3(double p = 10.0) { return {0.8, 0.8, 0.3, p, p}; }
GaussianProblem nocommon(double p = 10.0) { return {0.0, 0.0, 0.3, p, p}; }

HybridParams random_params(std::uint64_t seed, double coeff_range = 1.2,
                           double omega_lo = 0.2, double omega_hi = 2.0) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> uc(-coeff_range, coeff_range);
  std::uniform_real_distribution<double> uo(omega_lo, omega_hi);
  HybridParams p;
  for (auto& v : p.f1) v = uc(eng);
  for (auto& v : p.f2) v = uc(eng);
  for (auto& v : p.g1) v = uc(eng);
  for (auto& v : p.g2) v = uc(eng);
  p.omega0 = uo(eng);
  p.omega1 = uo(eng);
  p.omega2 = uo(eng);
  return p;
}

GaussianProblem random_problem(std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> ur(-0.85, 0.85);
  std::uniform_real_distribution<double> up(0.2, 8.0);
  for (;;) {
    GaussianProblem p{ur(eng), ur(eng), ur(eng), up(eng), up(eng)};
    try {
      p.validate();
      conditional_rho(p);
      return p;
    } catch (const std::exception&) {
    }
  }
}

UncodedGains random_gains(std::uint64_t seed, const GaussianProblem& prob) {
  std::mt19937_64 eng(seed ^ 0x9977);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  const double r1 = std::sqrt(prob.p1) * std::sqrt(u(eng));
  const double r2 = std::sqrt(prob.p2) * std::sqrt(u(eng));
  const double a1 = ang(eng), a2 = ang(eng);
  return {r1 * std::cos(a1), r1 * std::sin(a1), r2 * std::cos(a2),
          r2 * std::sin(a2)};
}

}  // namespace

TEST_CASE("transfer matrix: zero coefficients reduce to the fixed skeleton") {
  HybridParams p;
  p.f1 = p.f2 = {0.0, 0.0, 0.0};
  p.g1 = p.g2 = {0.0, 0.0, 0.0, 0.0};
  const auto a = assemble_transfer_matrix(p);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(7, 7);
  expected(0, 0) = expected(1, 1) = expected(2, 2) = 1.0;
  expected(3, 0) = expected(3, 3) = 1.0;  // V0 = S0 + W0
  expected(4, 4) = 1.0;                   // V1 = W1
  expected(5, 5) = 1.0;                   // V2 = W2
  expected(6, 6) = 1.0;                   // Y = Z
  CHECK((a - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("transfer matrix: fifth row and the a71 entry") {
  const auto p = random_params(5);
  const auto a = assemble_transfer_matrix(p);
  CHECK(a(4, 0) == doctest::Approx(p.f1[0] + p.f1[2]).epsilon(1e-15));
  CHECK(a(4, 1) == doctest::Approx(p.f1[1]).epsilon(1e-15));
  CHECK(a(4, 2) == 0.0);
  CHECK(a(4, 3) == doctest::Approx(p.f1[2]).epsilon(1e-15));
  CHECK(a(4, 4) == 1.0);

  const double a71 = p.g1[0] + p.g2[0] + p.g1[2] + p.g2[2] +
                     p.g1[3] * (p.f1[0] + p.f1[2]) +
                     p.g2[3] * (p.f2[0] + p.f2[2]);
  CHECK(a(6, 0) == doctest::Approx(a71).epsilon(1e-14));
  CHECK(a(6, 1) == doctest::Approx(p.g1[1] + p.g1[3] * p.f1[1]).epsilon(1e-14));
}

TEST_CASE("joint covariance: zero params leave only channel noise in Y") {
  HybridParams p;
  p.f1 = p.f2 = {0.0, 0.0, 0.0};
  p.g1 = p.g2 = {0.0, 0.0, 0.0, 0.0};
  p.omega0 = 0.0;
  const auto cov = hybrid_joint_covariance(p, fig3());
  CHECK(cov.matrix()(6, 6) == doctest::Approx(1.0));
  // omega0 = 0 makes V0 = S0 exactly.
  CHECK(cov.matrix()(3, 0) == doctest::Approx(1.0));
  CHECK(cov.matrix()(3, 3) == doctest::Approx(1.0));
}

TEST_CASE("joint covariance: source marginal is preserved bit-exactly") {
  const auto prob = fig3();
  const auto src = build_source_covariance(prob);
  for (std::uint64_t seed = 1; seed < 12; ++seed) {
    const auto cov = hybrid_joint_covariance(random_params(seed), prob);
    CHECK(cov.matrix().topLeftCorner<3, 3>() == src.matrix());
  }
}

TEST_CASE("joint covariance: matches a Monte Carlo sampling oracle") {
  const auto prob = fig3(4.0);
  const auto dec = conditional_rho(prob);
  const std::size_t n = 1000000;

  for (std::uint64_t seed : {21ULL, 22ULL}) {
    const auto p = random_params(seed);
    const auto analytic = hybrid_joint_covariance(p, prob);

    const auto s = sample_sources(prob, dec, n, 1000 + seed, 2);
    std::mt19937_64 eng(derive_seed(900, seed));
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::Matrix<double, 7, 7> acc = Eigen::Matrix<double, 7, 7>::Zero();
    const double sw0 = std::sqrt(p.omega0), sw1 = std::sqrt(p.omega1),
                 sw2 = std::sqrt(p.omega2);
    for (std::size_t i = 0; i < n; ++i) {
      const double w0 = sw0 * nd(eng), w1 = sw1 * nd(eng), w2 = sw2 * nd(eng);
      const double z = nd(eng);
      const double s0 = s.s0[i], s1 = s.s1p[i], s2 = s.s2p[i];
      const double v0 = s0 + w0;
      const double v1 = p.f1[0] * s0 + p.f1[1] * s1 + p.f1[2] * v0 + w1;
      const double v2 = p.f2[0] * s0 + p.f2[1] * s2 + p.f2[2] * v0 + w2;
      const double x1 = p.g1[0] * s0 + p.g1[1] * s1 + p.g1[2] * v0 + p.g1[3] * v1;
      const double x2 = p.g2[0] * s0 + p.g2[1] * s2 + p.g2[2] * v0 + p.g2[3] * v2;
      Eigen::Matrix<double, 7, 1> vec;
      vec << s0, s1, s2, v0, v1, v2, x1 + x2 + z;
      acc += vec * vec.transpose();
    }
    acc /= static_cast<double>(n);
    const double worst = (acc - analytic.matrix()).cwiseAbs().maxCoeff();
    CHECK(worst < 0.01 * std::max(1.0, analytic.matrix().cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("evaluate: zero params are infeasible with unit distortions") {
  HybridParams p;
  p.f1 = p.f2 = {0.0, 0.0, 0.0};
  p.g1 = p.g2 = {0.0, 0.0, 0.0, 0.0};
  const auto ev = evaluate_hybrid(p, fig3());
  CHECK(ev.power1 == doctest::Approx(0.0));
  CHECK(ev.power2 == doctest::Approx(0.0));
  CHECK(!ev.feasible);
  // V1, V2 are pure noise: the first three margins vanish, the fourth pays
  // the common-codeword information about the sources.
  CHECK(ev.margins[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(ev.margins[1] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(ev.margins[2] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(ev.margins[3] < 0.0);
  // d = 1 would need V0 to be useless; with omega0 = 1 it is not.
  CHECK(ev.d1 < 1.0);
}

TEST_CASE("uncoded closed form: zero gains give unit distortion") {
  const auto [d1, d2] = uncoded_distortions({0.0, 0.0, 0.0, 0.0}, fig3());
  CHECK(d1 == doctest::Approx(1.0));
  CHECK(d2 == doctest::Approx(1.0));
}

TEST_CASE("uncoded closed form: reference arithmetic at rho12 = 0.3") {
  const auto [d1, d2] =
      uncoded_distortions({0.0, 1.0, 0.0, 1.0}, nocommon(1.0));
  CHECK(d1 == doctest::Approx(1.0 - 1.69 / 3.6).epsilon(1e-12));
  CHECK(d2 == doctest::Approx(1.0 - 1.69 / 3.6).epsilon(1e-12));
}

TEST_CASE("uncoded closed form matches a first-principles MMSE oracle") {
  // Oracle route: assemble the (S1p, S2p, Y) covariance from the independent
  // base coordinates (S0, U, B1, B2, Z) and run the generic MMSE reduction.
  for (std::uint64_t seed = 31; seed < 71; ++seed) {
    const auto prob = random_problem(seed);
    const auto g = random_gains(seed, prob);
    const auto dec = conditional_rho(prob);

    Eigen::MatrixXd map(3, 5);  // rows: S1p, S2p, Y over (S0,U,B1,B2,Z)
    const double b1 = std::sqrt(1.0 - prob.rho01 * prob.rho01);
    const double b2 = std::sqrt(1.0 - prob.rho02 * prob.rho02);
    const double e1 = std::sqrt(std::max(0.0, 1.0 - dec.beta1 * dec.beta1));
    const double e2 = std::sqrt(std::max(0.0, 1.0 - dec.beta2 * dec.beta2));
    map << prob.rho01, b1 * dec.beta1, b1 * e1, 0.0, 0.0,
        prob.rho02, b2 * dec.beta2, 0.0, b2 * e2, 0.0,
        g.g10 + g.g20, g.g11 * dec.beta1 + g.g22 * dec.beta2, g.g11 * e1,
        g.g22 * e2, 1.0;
    Eigen::MatrixXd cov3 = map * map.transpose();
    cov3 = 0.5 * (cov3 + cov3.transpose());
    LabeledCovariance cov({"S1p", "S2p", "Y"}, cov3);

    const auto [d1, d2] = uncoded_distortions(g, prob);
    CHECK(d1 == doctest::Approx(mmse_reduce(cov, "S1p", {"Y"}).error_variance)
                    .epsilon(1e-10));
    CHECK(d2 == doctest::Approx(mmse_reduce(cov, "S2p", {"Y"}).error_variance)
                    .epsilon(1e-10));
  }
}

TEST_CASE("embedding: zero gains give zero G rows") {
  const auto p = embed_uncoded({0.0, 0.0, 0.0, 0.0}, fig3());
  for (double v : p.g1) CHECK(v == 0.0);
  for (double v : p.g2) CHECK(v == 0.0);
  for (double v : p.f1) CHECK(v == 0.0);
}

TEST_CASE("embedding: aligned basis when rho0k = 0") {
  const auto p = embed_uncoded({0.3, 0.7, -0.2, 0.5}, nocommon());
  CHECK(p.g1[0] == doctest::Approx(0.3));
  CHECK(p.g1[1] == doctest::Approx(0.7));
  CHECK(p.g2[0] == doctest::Approx(-0.2));
  CHECK(p.g2[1] == doctest::Approx(0.5));
  CHECK(p.g1[2] == 0.0);
  CHECK(p.g1[3] == 0.0);
}

TEST_CASE("embedding: degenerate basis throws") {
  CHECK_THROWS_AS(embed_uncoded({0.0, 1.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 1.0, 1.0}),
                  degenerate_basis);
}

TEST_CASE("embedding reproduces the closed-form distortions") {
  for (std::uint64_t seed = 201; seed < 301; ++seed) {
    const auto prob = random_problem(seed);
    const auto g = random_gains(seed, prob);
    const auto [d1, d2] = uncoded_distortions(g, prob);
    const auto ev = evaluate_hybrid(embed_uncoded(g, prob), prob);
    CHECK(ev.d1 == doctest::Approx(d1).epsilon(1e-9));
    CHECK(ev.d2 == doctest::Approx(d2).epsilon(1e-9));
    CHECK(ev.power1 == doctest::Approx(g.g10 * g.g10 + g.g11 * g.g11)
                           .epsilon(1e-9));
  }
}

TEST_CASE("evaluation is invariant under scaling V_k with its noise") {
  const auto prob = fig3(3.0);
  for (std::uint64_t seed = 41; seed < 49; ++seed) {
    const auto p = random_params(seed);
    const auto base = evaluate_hybrid(p, prob);

    const double c = 3.7;
    HybridParams scaled = p;
    for (auto& v : scaled.f1) v *= c;
    scaled.omega1 = p.omega1 * c * c;
    scaled.g1[3] = p.g1[3] / c;
    const auto ev = evaluate_hybrid(scaled, prob);

    CHECK(ev.d1 == doctest::Approx(base.d1).epsilon(1e-9));
    CHECK(ev.d2 == doctest::Approx(base.d2).epsilon(1e-9));
    CHECK(ev.power1 == doctest::Approx(base.power1).epsilon(1e-9));
    for (int i = 0; i < 4; ++i)
      CHECK(ev.margins[i] == doctest::Approx(base.margins[i]).epsilon(1e-7));
  }
}

TEST_CASE("margins agree with Monte Carlo information estimates") {
  const auto prob = fig3(2.0);
  const auto p = random_params(77, 0.8, 0.5, 1.5);
  const auto analytic = evaluate_hybrid(p, prob);

  const auto dec = conditional_rho(prob);
  const std::size_t n = 1000000;
  const auto s = sample_sources(prob, dec, n, 555, 2);
  std::mt19937_64 eng(999);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::Matrix<double, 7, 7> acc = Eigen::Matrix<double, 7, 7>::Zero();
  const double sw0 = std::sqrt(p.omega0), sw1 = std::sqrt(p.omega1),
               sw2 = std::sqrt(p.omega2);
  for (std::size_t i = 0; i < n; ++i) {
    const double w0 = sw0 * nd(eng), w1 = sw1 * nd(eng), w2 = sw2 * nd(eng);
    const double z = nd(eng);
    const double v0 = s.s0[i] + w0;
    const double v1 = p.f1[0] * s.s0[i] + p.f1[1] * s.s1p[i] + p.f1[2] * v0 + w1;
    const double v2 = p.f2[0] * s.s0[i] + p.f2[1] * s.s2p[i] + p.f2[2] * v0 + w2;
    const double x1 =
        p.g1[0] * s.s0[i] + p.g1[1] * s.s1p[i] + p.g1[2] * v0 + p.g1[3] * v1;
    const double x2 =
        p.g2[0] * s.s0[i] + p.g2[1] * s.s2p[i] + p.g2[2] * v0 + p.g2[3] * v2;
    Eigen::Matrix<double, 7, 1> vec;
    vec << s.s0[i], s.s1p[i], s.s2p[i], v0, v1, v2, x1 + x2 + z;
    acc += vec * vec.transpose();
  }
  acc /= static_cast<double>(n);

  // Margins recomputed from the empirical covariance (Gaussian entropies).
  LabeledCovariance emp({"S0", "S1", "S2", "V0", "V1", "V2", "Y"}, acc);
  auto ld = [&](const std::vector<std::string>& s) {
    return log_det(emp, s).value;
  };
  const double m1 = (ld({"V0", "V2", "Y"}) - ld({"V0", "V1", "V2", "Y"})) -
                    (ld({"V0", "V2", "S0", "S1"}) -
                     ld({"V0", "V1", "V2", "S0", "S1"}));
  CHECK(m1 == doctest::Approx(analytic.margins[0]).epsilon(0.05));
  const double m4 = (ld({"Y"}) - ld({"V0", "V1", "V2", "Y"})) -
                    (ld({"S0", "S1", "S2"}) -
                     ld({"V0", "V1", "V2", "S0", "S1", "S2"}));
  CHECK(std::abs(m4 - analytic.margins[3]) < 0.02);
}

TEST_CASE("proof-form margins differ from statement form in general") {
  const auto p = random_params(123);
  const auto prob = fig3(2.0);
  const auto statement = evaluate_hybrid(p, prob).margins;
  const auto proof = hybrid_margins_proof_form(p, prob);
  // Both are finite; the S0-inclusive sets give different conditional terms.
  bool any_diff = false;
  for (int i = 0; i < 4; ++i)
    if (std::abs(statement[i] - proof[i]) > 1e-9) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("proof-form margins relate exactly when S0 is fully decoupled") {
  // No common correlation and no S0-columns in the parameters: the first
  // three inequalities agree between the two variable-set conventions, and
  // the fourth differs exactly by the information the forced common
  // codeword V0 = S0 + W0 carries about S0.
  auto p = random_params(321);
  p.f1[0] = p.f2[0] = 0.0;
  p.g1[0] = p.g2[0] = 0.0;
  p.f1[2] = p.f2[2] = 0.0;  // V0 columns also touch S0 through V0 = S0 + W0
  p.g1[2] = p.g2[2] = 0.0;
  const auto prob = nocommon(2.0);
  const auto statement = evaluate_hybrid(p, prob).margins;
  const auto proof = hybrid_margins_proof_form(p, prob);
  for (int i = 0; i < 3; ++i)
    CHECK(statement[i] == doctest::Approx(proof[i]).epsilon(1e-9));
  const double v0_info = std::log(1.0 + 1.0 / p.omega0);  // 2 I(V0; S0)
  CHECK(statement[3] ==
        doctest::Approx(proof[3] - v0_info).epsilon(1e-9));
}

TEST_CASE("simulate_uncoded: determinism and closed-form agreement") {
  const auto prob = fig3(5.0);
  const UncodedGains g{1.0, 2.0, 1.0, 2.0};
  const auto a = simulate_uncoded(prob, g, 400000, 99, 1);
  const auto b = simulate_uncoded(prob, g, 400000, 99, 4);
  CHECK(a.d1 == b.d1);  // block-deterministic across thread counts
  CHECK(a.d2 == b.d2);

  const auto [c1, c2] = uncoded_distortions(g, prob);
  CHECK(std::abs(a.d1 - c1) < 3.0 * a.stderr1);
  CHECK(std::abs(a.d2 - c2) < 3.0 * a.stderr2);
}

TEST_CASE("simulate_uncoded: zero gains estimate unit distortion") {
  const auto sim = simulate_uncoded(nocommon(1.0), {0, 0, 0, 0}, 200000, 5, 2);
  CHECK(std::abs(sim.d1 - 1.0) < 3.0 * sim.stderr1);
}

TEST_CASE("optimize_uncoded: no power means unit distortion") {
  const auto r = optimize_uncoded({0.8, 0.8, 0.3, 0.0, 0.0}, 16);
  CHECK(r.d1 == doctest::Approx(1.0));
  CHECK(r.gains.g10 == doctest::Approx(0.0));
}

TEST_CASE("optimize_uncoded: symmetric problem has a symmetric optimum") {
  const auto r = optimize_uncoded(fig3(4.0), 96);
  const auto [d1, d2] = uncoded_distortions(r.gains, fig3(4.0));
  // Symmetrising the gains does not improve the objective.
  UncodedGains sym{0.5 * (r.gains.g10 + r.gains.g20),
                   0.5 * (r.gains.g11 + r.gains.g22),
                   0.5 * (r.gains.g10 + r.gains.g20),
                   0.5 * (r.gains.g11 + r.gains.g22)};
  const auto [s1, s2] = uncoded_distortions(sym, fig3(4.0));
  CHECK(std::max(d1, d2) <= std::max(s1, s2) + 1e-9);
  CHECK(std::abs(d1 - d2) < 1e-6);
}

TEST_CASE("optimize_uncoded: rho0k = 0 puts no power on the common part") {
  const auto r = optimize_uncoded(nocommon(2.0), 96);
  CHECK(std::abs(r.gains.g10) < 1e-5);
  CHECK(std::abs(r.gains.g20) < 1e-5);
  // All power on the conditional coordinate.
  CHECK(r.gains.g10 * r.gains.g10 + r.gains.g11 * r.gains.g11 ==
        doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("dithered embedding is strictly feasible and close to uncoded") {
  for (double p : {1.0, 10.0, 100.0}) {
    const auto prob = fig3(p);
    const auto unc = optimize_uncoded(prob, 64);
    const auto dith = dithered_uncoded_embedding(unc.gains, prob);
    REQUIRE(dith.has_value());
    const auto ev = evaluate_hybrid(*dith, prob);
    CHECK(ev.feasible);
    const double uncoded_best = std::max(unc.d1, unc.d2);
    CHECK(std::max(ev.d1, ev.d2) <= uncoded_best + 1e-9);
  }
}

TEST_CASE("optimize_hybrid: no power reports the unit-distortion point") {
  HybridSearchOptions opt;
  opt.budget = 800;
  opt.seed = 3;
  const auto res = optimize_hybrid({0.8, 0.8, 0.3, 0.0, 0.0}, opt);
  CHECK(!res.found_feasible);  // strict inequalities need channel capacity
  CHECK(res.evaluation.d1 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("optimize_hybrid dominates the optimized uncoded scheme") {
  const auto prob = fig3(10.0);
  const auto unc = optimize_uncoded(prob, 64);
  HybridSearchOptions opt;
  opt.budget = 12000;
  opt.seed = 11;
  opt.uncoded_start = unc.gains;
  const auto res = optimize_hybrid(prob, opt);
  REQUIRE(res.found_feasible);
  CHECK(std::max(res.evaluation.d1, res.evaluation.d2) <=
        std::max(unc.d1, unc.d2) + 1e-9);
}

TEST_CASE("optimize_hybrid: fully common source approaches coherent MMSE") {
  GaussianProblem prob{1.0, 1.0, 1.0, 4.0, 4.0};
  HybridSearchOptions opt;
  opt.budget = 16000;
  opt.seed = 19;
  const auto res = optimize_hybrid(prob, opt);
  REQUIRE(res.found_feasible);
  const double ideal = 1.0 / (1.0 + prob.p1 + prob.p2 +
                              2.0 * std::sqrt(prob.p1 * prob.p2));
  CHECK(res.evaluation.d1 >= ideal - 1e-9);
  CHECK(res.evaluation.d1 <= ideal + 2e-3);
}

TEST_CASE("search results re-validate on reload") {
  const auto prob = fig3(6.0);
  HybridSearchOptions opt;
  opt.budget = 5000;
  opt.seed = 77;
  opt.uncoded_start = optimize_uncoded(prob, 48).gains;
  const auto res = optimize_hybrid(prob, opt);
  REQUIRE(res.found_feasible);
  // Round-trip the parameters and re-evaluate from scratch.
  const HybridParams reloaded = res.params;
  const auto ev = evaluate_hybrid(reloaded, prob);
  CHECK(ev.feasible);
  CHECK(ev.d1 == doctest::Approx(res.evaluation.d1).epsilon(1e-12));
  CHECK(ev.d2 == doctest::Approx(res.evaluation.d2).epsilon(1e-12));
  for (int i = 0; i < 4; ++i)
    CHECK(ev.margins[i] ==
          doctest::Approx(res.evaluation.margins[i]).epsilon(1e-12));
}

TEST_CASE("optimize_hybrid is deterministic for a fixed seed") {
  const auto prob = nocommon(4.0);
  HybridSearchOptions opt;
  opt.budget = 4000;
  opt.seed = 123;
  opt.uncoded_start = optimize_uncoded(prob, 32).gains;
  const auto a = optimize_hybrid(prob, opt);
  const auto b = optimize_hybrid(prob, opt);
  CHECK(a.evaluation.d1 == b.evaluation.d1);
  CHECK(a.objective == b.objective);
  opt.threads = 4;
  const auto c = optimize_hybrid(prob, opt);
  CHECK(a.objective == c.objective);
  CHECK(a.evaluation.d1 == c.evaluation.d1);
}
