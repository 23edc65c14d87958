#include <doctest.h>

#include <cmath>

#include "coordkit/errors.hpp"
#include "coordkit/prob.hpp"
#include "coordkit/rng.hpp"
#include "oracles.hpp"

using namespace coordkit;

namespace {

AxisList abc() { return {{"A", 2}, {"B", 3}, {"C", 2}}; }

FiniteDist random_abc(std::uint64_t seed) {
  oracle::Lcg g(seed);
  return FiniteDist(abc(), g.simplex(12));
}

}  // namespace

TEST_CASE("distributions validate normalization and sign") {
  CHECK_THROWS_AS(FiniteDist({{"A", 2}}, {0.5, 0.6}), InstanceFormatError);
  CHECK_THROWS_AS(FiniteDist({{"A", 2}}, {1.5, -0.5}), InstanceFormatError);
  CHECK_THROWS_AS(FiniteDist({{"A", 2}}, {1.0}), InstanceFormatError);
  CHECK_THROWS_AS(FiniteDist({{"A", 2}, {"A", 2}}, std::vector<double>(4, 0.25)), InstanceFormatError);
  CHECK_NOTHROW(FiniteDist({{"A", 2}}, {0.5, 0.5 + 5e-10}));
  CHECK_THROWS_AS(Kernel({{"A", 2}}, {{"B", 2}}, {1.0, 0.0, 0.3, 0.3}), InstanceFormatError);
}

TEST_CASE("entropy of uniform and point masses") {
  CHECK(entropy(FiniteDist::uniform({{"A", 8}})) == doctest::Approx(3.0).epsilon(1e-14));
  const std::size_t idx[] = {1};
  CHECK(entropy(FiniteDist::point_mass({{"A", 4}}, idx)) == 0.0);
  const double p[] = {0.25, 0.75};
  CHECK(entropy_bits(p) == doctest::Approx(oracle::hb(0.25)).epsilon(1e-14));
}

TEST_CASE("mutual information agrees with brute-force entropies") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto d = random_abc(s);
    const auto ref = oracle::from_table({2, 3, 2}, {d.table().begin(), d.table().end()});
    CHECK(mutual_information(d, {"A"}, {"B"}) == doctest::Approx(ref.mi({0}, {1})).epsilon(1e-12));
    CHECK(mutual_information(d, {"A"}, {"B"}, {"C"}) == doctest::Approx(ref.mi({0}, {1}, {2})).epsilon(1e-12));
    CHECK(mutual_information(d, {"A", "C"}, {"B"}) == doctest::Approx(ref.mi({0, 2}, {1})).epsilon(1e-12));
    CHECK(entropy(d, {"B", "C"}) == doctest::Approx(ref.h({1, 2})).epsilon(1e-12));
  }
}

TEST_CASE("marginal and conditional recompose the joint") {
  const auto d = random_abc(7);
  const auto ab = marginal(d, {"A", "B"});
  const auto back = join(ab, conditional(d, {"C"}, {"A", "B"}));
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(back[i] == doctest::Approx(d[i]).epsilon(1e-14));
  const auto r = reorder(d, {"C", "A", "B"});
  CHECK(r.at({1, 0, 2}) == doctest::Approx(d.at({0, 2, 1})));
}

TEST_CASE("conditional rows on zero-mass events are uniform") {
  FiniteDist d({{"A", 2}, {"B", 2}}, {0.5, 0.5, 0.0, 0.0});
  const auto k = conditional(d, {"B"}, {"A"});
  CHECK(k(1, 0) == 0.5);
  CHECK(k(1, 1) == 0.5);
}

TEST_CASE("total variation") {
  FiniteDist p({{"A", 3}}, {0.5, 0.5, 0.0});
  FiniteDist q({{"A", 3}}, {0.2, 0.3, 0.5});
  CHECK(tv_distance(p, q) == doctest::Approx(0.5));
  CHECK(tv_distance(p, p) == 0.0);
  CHECK_THROWS_AS(tv_distance(p, FiniteDist({{"B", 3}}, {0.2, 0.3, 0.5})), InstanceFormatError);
}

TEST_CASE("empirical distribution and typicality") {
  SymbolSequenceBlock b{{{"A", 2}, {"B", 2}}, {{0, 0, 1, 1}, {0, 1, 1, 1}}};
  const auto counts = empirical_counts(b);
  CHECK(counts == std::vector<std::uint64_t>{1, 1, 0, 2});
  const auto e = empirical_distribution(b);
  CHECK(e[3] == 0.5);
  CHECK(is_typical(b, e, 1e-12));
  FiniteDist zero_cell({{"A", 2}, {"B", 2}}, {0.25, 0.25, 0.0, 0.5});
  CHECK(is_typical(b, zero_cell, 0.01));
  FiniteDist forbids({{"A", 2}, {"B", 2}}, {0.0, 0.5, 0.0, 0.5});
  CHECK_FALSE(is_typical(b, forbids, 10.0));

  SymbolSequenceBlock ragged{{{"A", 2}, {"B", 2}}, {{0, 1}, {0}}};
  CHECK_THROWS_AS(ragged.validate(), InstanceFormatError);
  SymbolSequenceBlock out_of_range{{{"A", 2}}, {{0, 2}}};
  CHECK_THROWS_AS(out_of_range.validate(), InstanceFormatError);
}

TEST_CASE("concatenation appends sequences") {
  SymbolSequenceBlock b1{{{"A", 2}}, {{0, 1}}};
  SymbolSequenceBlock b2{{{"A", 2}}, {{1, 1, 1}}};
  const SymbolSequenceBlock parts[] = {b1, b2};
  const auto c = concatenate(parts);
  CHECK(c.length() == 5);
  CHECK(empirical_counts(c) == std::vector<std::uint64_t>{1, 4});
}

TEST_CASE("kernels") {
  const std::size_t map[] = {1, 0};
  const auto k = Kernel::deterministic({{"A", 2}}, {{"B", 2}}, map);
  CHECK(k.is_permutation());
  CHECK_FALSE(Kernel::uniform({{"A", 2}}, {{"B", 2}}).is_permutation());
  FiniteDist u = FiniteDist::uniform({{"A", 2}});
  const auto j = join(u, k);
  CHECK(j.at({0, 1}) == 0.5);
  CHECK(j.at({0, 0}) == 0.0);
}

TEST_CASE("counter rng is reproducible and position addressable") {
  CounterRng a(derive_seed(42, 1, 2)), b(derive_seed(42, 1, 2)), c(derive_seed(42, 1, 3));
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  CHECK(a() != c());
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));

  CounterRng r(5);
  const double p[] = {0.0, 0.3, 0.7};
  std::size_t hits[3] = {0, 0, 0};
  for (int i = 0; i < 100000; ++i) ++hits[r.categorical(p)];
  CHECK(hits[0] == 0);
  CHECK(std::abs(static_cast<double>(hits[1]) / 100000.0 - 0.3) < 0.01);
}
