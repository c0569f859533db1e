#include <doctest.h>

#include <cmath>

#include "macbounds/certify.hpp"
#include "macbounds/common.hpp"
#include "macbounds/pmf.hpp"

using namespace macbounds;

namespace {

JointPmf bivariate(const std::vector<double>& table, std::size_t n1,
                   std::size_t n2) {
  std::vector<PmfAxis> axes(2);
  axes[0].name = "S1";
  axes[1].name = "S2";
  for (std::size_t i = 0; i < n1; ++i)
    axes[0].symbols.push_back(std::to_string(i));
  for (std::size_t i = 0; i < n2; ++i)
    axes[1].symbols.push_back(std::to_string(i));
  return JointPmf(std::move(axes), table);
}

JointPmf dsbs(double crossover) {
  return bivariate({0.5 * (1 - crossover), 0.5 * crossover,
                    0.5 * crossover, 0.5 * (1 - crossover)},
                   2, 2);
}

JointPmf independent_uniform_22() {
  return bivariate({0.25, 0.25, 0.25, 0.25}, 2, 2);
}

}  // namespace

TEST_CASE("pmf validation") {
  CHECK_THROWS_AS(bivariate({0.5, 0.6, 0.0, 0.0}, 2, 2), invalid_input);
  CHECK_THROWS_AS(bivariate({1.5, -0.5, 0.0, 0.0}, 2, 2), invalid_input);
  CHECK_NOTHROW(bivariate({0.25, 0.25, 0.25, 0.25}, 2, 2));
}

TEST_CASE("entropy and marginals") {
  const auto pmf = independent_uniform_22();
  CHECK(pmf.entropy({"S1"}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(pmf.entropy({"S1", "S2"}) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  const auto m = pmf.marginal({"S2"});
  CHECK(m.table()[0] == doctest::Approx(0.5));
}

TEST_CASE("mutual information: independent coordinates give zero") {
  CHECK(independent_uniform_22().mutual_information({"S1"}, {"S2"}) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mutual information: identical coordinate gives its entropy") {
  const auto pmf = bivariate({0.3, 0.0, 0.0, 0.7}, 2, 2);
  CHECK(pmf.mutual_information({"S1"}, {"S2"}) ==
        doctest::Approx(pmf.entropy({"S1"})).epsilon(1e-12));
}

TEST_CASE("mutual information: DSBS crossover 0.1 in nats") {
  const double h2 = -0.1 * std::log(0.1) - 0.9 * std::log(0.9);
  CHECK(dsbs(0.1).mutual_information({"S1"}, {"S2"}) ==
        doctest::Approx(std::log(2.0) - h2).epsilon(1e-12));
  CHECK(dsbs(0.1).mutual_information({"S1"}, {"S2"}) ==
        doctest::Approx(0.3680).epsilon(1e-3));
}

TEST_CASE("mutual information rejects overlapping label sets") {
  CHECK_THROWS_AS(
      independent_uniform_22().mutual_information({"S1"}, {"S1"}, {}),
      invalid_input);
}

TEST_CASE("common part: diagonal pmf recovers the identity") {
  const auto cp = extract_common_part(bivariate({0.2, 0, 0, 0, 0.3, 0, 0, 0, 0.5}, 3, 3));
  CHECK(cp.s0_cardinality == 3);
  CHECK(cp.f1 == std::vector<int>{0, 1, 2});
  CHECK(cp.f2 == std::vector<int>{0, 1, 2});
}

TEST_CASE("common part: full support collapses to one component") {
  const auto cp = extract_common_part(independent_uniform_22());
  CHECK(cp.s0_cardinality == 1);
}

TEST_CASE("common part: 4x4 block example returns the block map") {
  std::vector<double> t(16, 0.0);
  auto set = [&](int a, int b, double v) { t[a * 4 + b] = v; };
  set(0, 0, 0.1);
  set(0, 1, 0.1);
  set(1, 0, 0.1);
  set(1, 1, 0.2);
  set(2, 2, 0.1);
  set(2, 3, 0.1);
  set(3, 2, 0.2);
  set(3, 3, 0.1);
  const auto cp = extract_common_part(bivariate(t, 4, 4));
  CHECK(cp.s0_cardinality == 2);
  CHECK(cp.f1 == std::vector<int>{0, 0, 1, 1});
  CHECK(cp.f2 == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("common part: idempotent on (S0, S1)") {
  std::vector<double> t(16, 0.0);
  t[0] = 0.2;
  t[1 * 4 + 1] = 0.3;
  t[2 * 4 + 2] = 0.1;
  t[2 * 4 + 3] = 0.4;  // symbols 2,3 of S2 share a component with S1 symbol 2
  const auto pmf = bivariate(t, 4, 4);
  const auto cp = extract_common_part(pmf);
  const auto joint = attach_common_part(pmf, cp);

  // Re-extract on (S0, S1): the common part of S0 with S1 is S0 itself.
  const auto s0s1 = joint.marginal({"S0", "S1"});
  std::vector<PmfAxis> axes = s0s1.axes();
  axes[0].name = "S1";
  axes[1].name = "S2";
  const auto re = extract_common_part(JointPmf(axes, s0s1.table()));
  CHECK(re.s0_cardinality == cp.s0_cardinality);
  // And the extracted f1 on S0 symbols is injective (identity up to relabel).
  std::vector<int> seen(re.s0_cardinality, 0);
  for (int c : re.f1) seen[c]++;
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("common part is maximal: every common function coarsens it") {
  // All function pairs on <= 4-symbol alphabets into <= 4 values.
  std::vector<double> t(16, 0.0);
  t[0] = 0.25;
  t[5] = 0.25;
  t[10] = 0.25;
  t[11] = 0.125;
  t[14] = 0.125;  // components {0}, {1}, {2, 3}
  const auto pmf = bivariate(t, 4, 4);
  const auto cp = extract_common_part(pmf);
  CHECK(cp.s0_cardinality == 3);

  const auto& table = pmf.table();
  int checked = 0;
  for (int code1 = 0; code1 < 256; ++code1) {
    for (int code2 = 0; code2 < 256; ++code2) {
      auto f = [&](int code, int s) { return (code >> (2 * s)) & 3; };
      bool common = true;
      for (int s1 = 0; s1 < 4 && common; ++s1)
        for (int s2 = 0; s2 < 4 && common; ++s2)
          if (table[s1 * 4 + s2] > 0.0 && f(code1, s1) != f(code2, s2))
            common = false;
      if (!common) continue;
      ++checked;
      // f must be constant on each extracted component.
      for (int s1 = 0; s1 < 4; ++s1)
        for (int s1b = 0; s1b < 4; ++s1b)
          if (cp.f1[s1] == cp.f1[s1b]) CHECK(f(code1, s1) == f(code1, s1b));
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("random pmfs are valid and seeded deterministically") {
  const auto a = random_pmf({"A", "B"}, {3, 3}, 5);
  const auto b = random_pmf({"A", "B"}, {3, 3}, 5);
  CHECK(a.table() == b.table());
  const auto c = random_pmf({"A", "B"}, {3, 3}, 6);
  CHECK(a.table() != c.table());
}
