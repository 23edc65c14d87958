#include <doctest.h>

#include <cmath>

#include "coordkit/binary.hpp"
#include "coordkit/errors.hpp"
#include "coordkit/region.hpp"
#include "oracles.hpp"

using namespace coordkit;

TEST_CASE("capacity of standard channels") {
  for (double e : {0.0, 0.1, 0.25, 0.5}) {
    const auto c = channel_capacity(binary_symmetric_channel(e));
    CHECK(c.capacity == doctest::Approx(1.0 - oracle::hb(e)).epsilon(1e-9));
  }
  // Z channel, 1 -> 0 with probability q: log2(1 + (1 - q) q^(q / (1 - q))).
  const double q = 0.3;
  const auto z = channel_capacity(make_channel(2, 2, {1.0, 0.0, q, 1.0 - q}));
  CHECK(z.capacity == doctest::Approx(std::log2(1.0 + (1.0 - q) * std::pow(q, q / (1.0 - q)))).epsilon(1e-9));
  CHECK(channel_capacity(identity_channel(4)).capacity == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("membership at zero capacity follows the independence rule") {
  const auto useless = binary_symmetric_channel(0.5);
  const auto indep = StrictInstance(make_source({0.4, 0.6}), useless,
                                    make_target(2, 2, 2, {0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4}));
  const auto m1 = membership(indep);
  CHECK(m1.zero_capacity_rule);
  CHECK(m1.verdict == Verdict::Achievable);
  const auto dep = StrictInstance(make_source({0.4, 0.6}), useless,
                                  make_target(2, 2, 2, {0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5}));
  const auto m2 = membership(dep);
  CHECK(m2.verdict == Verdict::NotAchievable);
  CHECK(m2.source_target_information == doctest::Approx(oracle::hb(0.4)).epsilon(1e-9));
}

TEST_CASE("expected utility matches explicit summation") {
  oracle::Lcg g(3);
  const auto src = make_source(g.simplex(2));
  const auto ch = make_channel(2, 2, g.rows(2, 2));
  const auto tg = make_target(2, 2, 2, g.rows(2, 4));
  UtilitySpec util;
  util.u_size = util.x_size = util.y_size = util.v_size = 2;
  for (int i = 0; i < 16; ++i) util.phi.push_back(g.uniform() - 0.5);
  double expected = 0.0;
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t v = 0; v < 2; ++v)
          expected += src[u] * tg(u, x * 2 + v) * ch(x, y) * util(u, x, y, v);
  CHECK(expected_utility(tg, src, ch, util) == doctest::Approx(expected).epsilon(1e-14));

  util.phi.pop_back();
  CHECK_THROWS_AS(expected_utility(tg, src, ch, util), InstanceFormatError);
}

TEST_CASE("distortion-cost utilities") {
  AlphabetProfile p{2, 2, 2, 2, {}, {}, {}};
  const auto util = UtilitySpec::from_distortion_cost(p, {0, 1, 1, 0}, {0, 1});
  CHECK(util(0, 1, 0, 1) == -2.0);
  CHECK(util(1, 0, 1, 1) == 0.0);
  const auto k = distortion_cost_target(0.3, 0.2);
  CHECK(k(0, 0 * 2 + 1) == doctest::Approx(0.3 * 0.2));
  CHECK(k(1, 1 * 2 + 1) == doctest::Approx(0.7 * 0.8));
}

TEST_CASE("family bisection reproduces the closed-form boundary") {
  const auto src = make_source({0.5, 0.5});
  const auto fam = FamilySpec::coordination();
  for (double e : {0.0, 0.1, 0.25}) {
    const auto ch = binary_symmetric_channel(e);
    const auto lo = boundary_bisection_family(fam, src, ch, BoundSelector::Lower);
    const auto hi = boundary_bisection_family(fam, src, ch, BoundSelector::Upper);
    CHECK(lo.param_star == doctest::Approx(gamma_star(e, BoundKind::Lower)).epsilon(1e-5));
    CHECK(hi.param_star == doctest::Approx(gamma_star(e, BoundKind::Upper)).epsilon(1e-5));
    CHECK(lo.param_star <= hi.param_star + 1e-6);
  }
}

TEST_CASE("certified bisection lies between the bound roots") {
  const auto src = make_source({0.5, 0.5});
  const auto r = boundary_bisection_family(FamilySpec::coordination(), src, binary_symmetric_channel(0.25),
                                           BoundSelector::Certified);
  CHECK(r.param_star >= gamma_star(0.25, BoundKind::Lower) - 1e-4);
  CHECK(r.param_star <= gamma_star(0.25, BoundKind::Upper) + 1e-4);
}

TEST_CASE("distortion-cost grid agrees with the closed form") {
  const auto g = distortion_cost_region(0.25, 0.25, 0.1);
  CHECK(g.d_values.size() == 11);
  CHECK(g.c_values.size() == 11);
  for (std::size_t i = 0; i < g.c_values.size(); ++i)
    for (std::size_t j = 0; j < g.d_values.size(); ++j) {
      const auto& c = g.at(i, j);
      CHECK(c.constraint == doctest::Approx(dc_constraint(c.cost, c.distortion, 0.25, 0.25)).epsilon(1e-12));
      CHECK(c.achievable == (c.constraint >= -1e-12));
    }
  CHECK_THROWS(distortion_cost_region(0.5, 0.1, 0.0));
}

TEST_CASE("utility maximization over a useless channel") {
  // X = U with V independent of U is achievable and gets utility 1/2.
  const auto fam = game_family(0.25);
  MaxUtilityOptions o;
  o.outer_iters = 60;
  const auto r = max_utility_generic(make_source({0.5, 0.5}), binary_symmetric_channel(0.5), fam.utility, o);
  CHECK(r.utility == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.report.value >= -1e-9);
}
