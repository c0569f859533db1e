#include <doctest.h>

#include <cmath>
#include <map>

#include "macbounds/common.hpp"
#include "macbounds/json_io.hpp"
#include "macbounds/sweep.hpp"

using namespace macbounds;

namespace {
SweepSpec tiny_spec() {
  SweepSpec s;
  s.base = {0.8, 0.8, 0.3, 1.0, 1.0};
  s.grid_db = {0.0, 10.0};
  s.curves = {"uncoded_common", "uncoded_nocommon"};
  s.uncoded_resolution = 48;
  s.seed = 5;
  s.threads = 2;
  return s;
}
}  // namespace

TEST_CASE("sweep validation") {
  auto s = tiny_spec();
  s.curves.clear();
  CHECK_THROWS_AS(run_sweep(s), invalid_input);
  s = tiny_spec();
  s.grid_db = {3.0, 1.0};
  CHECK_THROWS_AS(run_sweep(s), invalid_input);
  s = tiny_spec();
  s.curves = {"nonsense"};
  CHECK_THROWS_AS(run_sweep(s), invalid_input);
}

TEST_CASE("sweep: one row per curve and grid point, sorted") {
  const auto rows = run_sweep(tiny_spec());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].curve == "uncoded_common");
  CHECK(rows[1].curve == "uncoded_common");
  CHECK(rows[2].curve == "uncoded_nocommon");
  CHECK(rows[0].param_db == 0.0);
  CHECK(rows[1].param_db == 10.0);
  CHECK(rows[1].param_linear == doctest::Approx(10.0));
}

TEST_CASE("sweep: single-point grid emits one row per curve") {
  auto s = tiny_spec();
  s.grid_db = {6.0};
  const auto rows = run_sweep(s);
  CHECK(rows.size() == 2);
}

TEST_CASE("sweep: distortion curves decrease with power") {
  auto s = tiny_spec();
  s.grid_db = {0.0, 6.0, 12.0, 20.0};
  const auto rows = run_sweep(s);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].curve != rows[i - 1].curve) continue;
    CHECK(rows[i].d1 <= rows[i - 1].d1 + 1e-9);
  }
}

TEST_CASE("sweep: all six curves are monotone and ordered") {
  SweepSpec s;
  s.base = {0.8, 0.8, 0.3, 1.0, 1.0};
  s.grid_db = {0.0, 8.0, 16.0};
  s.curves = kAllCurves;
  s.hybrid_budget = 9000;
  s.uncoded_resolution = 64;
  s.outer_grid.rho_hat_points = 41;
  s.outer_grid.rho_hat0_points = 21;
  s.outer_grid.beta_points = 21;
  s.outer_tol = 1e-4;
  s.seed = 11;
  s.threads = 2;
  const auto rows = run_sweep(s);
  REQUIRE(rows.size() == 18);

  std::map<std::string, std::vector<RegionSample>> by;
  for (const auto& r : rows) by[r.curve].push_back(r);
  for (const auto& [curve, samples] : by) {
    for (std::size_t i = 1; i < samples.size(); ++i)
      CHECK(std::max(samples[i].d1, samples[i].d2) <=
            std::max(samples[i - 1].d1, samples[i - 1].d2) + 1e-9);
  }
  for (const char* cfg : {"common", "nocommon"}) {
    const auto& unc = by["uncoded_" + std::string(cfg)];
    const auto& hyb = by["hybrid_" + std::string(cfg)];
    const auto& out = by["outer_" + std::string(cfg)];
    for (std::size_t i = 0; i < unc.size(); ++i) {
      CHECK(hyb[i].feasible);
      CHECK(std::max(hyb[i].d1, hyb[i].d2) <=
            std::max(unc[i].d1, unc[i].d2) + 1e-9);
      CHECK(std::max(out[i].d1, out[i].d2) <=
            std::max(hyb[i].d1, hyb[i].d2) + 1e-6);
    }
  }
}

TEST_CASE("sweep: common part never hurts the uncoded bound") {
  auto s = tiny_spec();
  s.grid_db = {0.0, 5.0, 10.0, 15.0};
  const auto rows = run_sweep(s);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& common = rows[i];
    const auto& nocommon = rows[i + 4];
    REQUIRE(common.curve == "uncoded_common");
    REQUIRE(nocommon.curve == "uncoded_nocommon");
    CHECK(std::max(common.d1, common.d2) <=
          std::max(nocommon.d1, nocommon.d2) + 1e-9);
  }
}

TEST_CASE("csv emission is stable and carries the pinned header") {
  const auto rows = run_sweep(tiny_spec());
  const auto csv = to_csv(rows);
  CHECK(csv.rfind("curve,param_db,param_linear,d1,d2,feasible,margin_min,"
                  "seconds\n", 0) == 0);
  const auto csv2 = to_csv(run_sweep(tiny_spec()));
  CHECK(csv == csv2);
  // Seconds column stays zero unless timing was requested.
  auto s = tiny_spec();
  s.timing = false;
  for (const auto& r : run_sweep(s)) CHECK(r.seconds == 0.0);
}

TEST_CASE("sweep rows re-validate against a direct uncoded optimization") {
  auto s = tiny_spec();
  s.grid_db = {8.0};
  s.curves = {"uncoded_nocommon"};
  const auto rows = run_sweep(s);
  REQUIRE(rows.size() == 1);
  GaussianProblem p{0.0, 0.0, 0.3, std::pow(10.0, 0.8), std::pow(10.0, 0.8)};
  const auto direct = optimize_uncoded(p, s.uncoded_resolution);
  CHECK(rows[0].d1 == doctest::Approx(direct.d1).epsilon(1e-12));
}

TEST_CASE("pareto trace sweeps the weighted scalarization") {
  GaussianProblem p{0.0, 0.0, 0.3, 4.0, 4.0};
  const auto pts = pareto_trace(p, {0.25, 1.0, 4.0}, 3000, 3, 2);
  REQUIRE(pts.size() == 3);
  for (const auto& pt : pts) CHECK(pt.feasible);
  // Heavier weight on d2 should not increase d2.
  CHECK(pts[2].d2 <= pts[0].d2 + 1e-6);
}

TEST_CASE("json round trips") {
  GaussianProblem p{0.8, 0.7, 0.2, 2.0, 3.0};
  const auto q = problem_from_json(to_json(p));
  CHECK(q.rho01 == p.rho01);
  CHECK(q.p2 == p.p2);
  CHECK(to_json(p)["rho01"] == 0.8);

  HybridParams hp;
  hp.f1 = {0.1, -0.2, 0.3};
  hp.g2 = {1.0, 2.0, 3.0, 4.0};
  hp.omega1 = 0.5;
  const auto hq = hybrid_params_from_json(to_json(hp));
  CHECK(hq.f1 == hp.f1);
  CHECK(hq.g2 == hp.g2);
  CHECK(hq.omega1 == hp.omega1);

  const auto pmf = random_pmf({"S1", "S2"}, {2, 3}, 9);
  const auto back = pmf_from_json(to_json(pmf));
  CHECK(back.table() == pmf.table());
  CHECK(back.axes()[1].name == "S2");
}
