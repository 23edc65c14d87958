#include <doctest.h>

#include <cmath>

#include "coordkit/errors.hpp"
#include "coordkit/region.hpp"
#include "coordkit/sim.hpp"
#include "oracles.hpp"

using namespace coordkit;

namespace {

/// Q(x,v|u) = Q(x) Q(v): nothing to describe, so rates are just delta.
StrictInstance product_instance() {
  return StrictInstance(make_source({0.5, 0.5}), binary_symmetric_channel(0.1),
                        make_target(2, 2, 2, {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25}));
}

StrictInstance lossless_instance() {
  return StrictInstance(make_source({0.1, 0.9}), identity_channel(2),
                        make_target(2, 2, 2, {0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5}));
}

CodeConfig small_config() {
  CodeConfig c;
  c.n = 100;
  c.blocks = 5;
  c.delta = 0.05;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("rate plan arithmetic") {
  const auto p = plan_rates(0.2, 0.1, 0.6, 0.7, 0.05);
  CHECK(p.r == doctest::Approx(0.25));
  CHECK(p.r_l == doctest::Approx(0.15));
  CHECK(p.slack == doctest::Approx(0.6 - 0.05 - 0.25 - 0.15));
  CHECK(p.init_margin == doctest::Approx(0.7 - 0.25 - 0.1));
  CHECK(p.feasible);
  const auto bad = plan_rates(0.2, 0.1, 0.3, 0.7, 0.05);
  CHECK_FALSE(bad.feasible);
  CHECK_FALSE(bad.violated.empty());
  CHECK_FALSE(plan_rates(0.2, 0.0, 0.9, 0.2, 0.05).feasible);
  CHECK_THROWS_AS(plan_rates(0.2, 0.1, 0.6, 0.7, 0.0), ConfigurationError);
}

TEST_CASE("plan from an instance uses the auxiliary's information terms") {
  const auto inst = product_instance();
  const auto p = plan_rates(inst, aux_equal_to_x(inst), 0.05);
  CHECK(p.i_source == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.i_bin == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.i_pack == doctest::Approx(1.0 - oracle::hb(0.1)).epsilon(1e-12));
  CHECK(p.capacity == doctest::Approx(1.0 - oracle::hb(0.1)).epsilon(1e-9));
}

TEST_CASE("configuration validation") {
  CodeConfig c;
  c.blocks = 2;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = CodeConfig{};
  c.eps_typ = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = CodeConfig{};
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
}

TEST_CASE("codebooks are reproducible and follow their laws") {
  const auto inst = product_instance();
  const auto books = build_codebooks(inst, aux_equal_to_x(inst), small_config());
  CHECK(books.m_count() == 32);
  CHECK(books.l_count() == 32);
  CHECK(books.size(Book::W) == 1024);
  CHECK(books.sequence(Book::V, 3) == books.sequence(Book::V, 3));
  CHECK(books.sequence(Book::V, 3) != books.sequence(Book::V, 4));
  CHECK(books.sequence(Book::V, 3) != books.sequence(Book::W, 3));
  std::size_t ones = 0;
  for (std::size_t m = 0; m < books.m_count(); ++m)
    for (auto s : books.sequence(Book::V, m)) ones += s;
  CHECK(std::abs(static_cast<double>(ones) / 3200.0 - 0.5) < 0.05);
  CHECK_THROWS_AS(books.sequence(Book::V, 32), ConfigurationError);
}

TEST_CASE("oversized or infeasible constructions are refused") {
  const auto lossless = lossless_instance();
  CHECK_THROWS_AS(build_codebooks(lossless, aux_equal_to_x(lossless), small_config()), ConfigurationError);
  const auto useless = StrictInstance(make_source({0.5, 0.5}), binary_symmetric_channel(0.5),
                                      make_target(2, 2, 2, {0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5}));
  CHECK_THROWS_AS(SimScheme::strict(useless, aux_equal_to_x(useless), small_config()), InfeasibleError);
}

TEST_CASE("trials are deterministic and satisfy the block identities") {
  const auto inst = product_instance();
  const auto scheme = SimScheme::strict(inst, aux_equal_to_x(inst), small_config());
  const auto a = run_trial(scheme, 0);
  const auto b = run_trial(scheme, 0);
  const auto c = run_trial(scheme, 1);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.blocks.size() == 5);
  CHECK(mixing_identity_holds(a));
  CHECK(typicality_implication_holds(a, scheme.target(), 0.1));
  std::uint64_t total = 0;
  for (auto n : a.counts_full) total += n;
  CHECK(total == 500);

  // Full empirical distribution as the weighted mix of the parts.
  double worst = 0.0;
  for (std::size_t k = 0; k < a.counts_full.size(); ++k) {
    double first = 0.0, last = 0.0;
    first = static_cast<double>(a.blocks.front().counts[k]) / 100.0;
    last = static_cast<double>(a.blocks.back().counts[k]) / 100.0;
    const double mix = (3.0 * a.empirical_truncated[k] + first + last) / 5.0;
    worst = std::max(worst, std::abs(mix - a.empirical_full[k]));
  }
  CHECK(worst < 1e-15);
  CHECK(a.tv_full == doctest::Approx(tv_distance(a.empirical_full, inst.joint())).epsilon(1e-15));
}

TEST_CASE("a corrupted record breaks the mixing identity") {
  const auto inst = product_instance();
  auto r = run_trial(SimScheme::strict(inst, aux_equal_to_x(inst), small_config()), 0);
  r.counts_full[0] += 1;
  CHECK_FALSE(mixing_identity_holds(r));
}

TEST_CASE("channel outputs follow the channel") {
  const auto inst = product_instance();
  auto cfg = small_config();
  cfg.blocks = 12;
  const auto r = run_trial(SimScheme::strict(inst, aux_equal_to_x(inst), cfg), 0);
  // Over blocks, P(Y != X) should be near the crossover.
  std::uint64_t flips = 0, all = 0;
  for (std::size_t k = 0; k < r.counts_full.size(); ++k) {
    const std::size_t x = (k / 4) % 2, y = (k / 2) % 2;
    all += r.counts_full[k];
    if (x != y) flips += r.counts_full[k];
  }
  CHECK(std::abs(static_cast<double>(flips) / static_cast<double>(all) - 0.1) < 0.03);
}

TEST_CASE("zero-capacity scheme coordinates independent targets") {
  const auto inst = StrictInstance(make_source({0.3, 0.7}), binary_symmetric_channel(0.5),
                                   make_target(2, 2, 2, {0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4}));
  CodeConfig cfg = small_config();
  cfg.n = 2000;
  const auto scheme = SimScheme::zero_capacity(inst, cfg);
  const auto s = monte_carlo(scheme, 5);
  CHECK(s.mixing_identity_ok);
  CHECK(s.typicality_implication_ok);
  CHECK(s.mean_tv_full < 0.05);
  CHECK(s.rates.cover_v == 0.0);
}

TEST_CASE("causal mode runs through the embedding") {
  const auto inst = product_instance();
  const auto r = run_trial(inst, aux_equal_to_x(inst), small_config(), SimMode::Causal, 0);
  CHECK(mixing_identity_holds(r));
  CHECK(r == run_trial(inst, aux_equal_to_x(inst), small_config(), SimMode::Causal, 0));
}

TEST_CASE("monte carlo summary") {
  const auto inst = product_instance();
  const auto scheme = SimScheme::strict(inst, aux_equal_to_x(inst), small_config());
  const auto s = monte_carlo(scheme, 4);
  CHECK(s.trials == 4);
  CHECK(s.pe >= 0.0);
  CHECK(s.pe <= 1.0);
  CHECK(s.ci_halfwidth == doctest::Approx(1.96 * std::sqrt(s.pe * (1.0 - s.pe) / 4.0)));
  CHECK(s.mixing_identity_ok);
  CHECK_THROWS_AS(monte_carlo(scheme, 0), ConfigurationError);
}

TEST_CASE("concatenation of typical blocks is typical") {
  const FiniteDist target({{"A", 2}}, {0.5, 0.5});
  SymbolSequenceBlock b1{{{"A", 2}}, {{0, 1, 0, 1}}};
  SymbolSequenceBlock b2{{{"A", 2}}, {{1, 1, 0, 0}}};
  SymbolSequenceBlock b3{{{"A", 2}}, {{1, 1, 1, 0}}};
  const SymbolSequenceBlock good[] = {b1, b2};
  CHECK(concatenation_check(good, target, 0.01));
  const SymbolSequenceBlock mixed[] = {b1, b3};
  CHECK_FALSE(concatenation_check(mixed, target, 0.01));
  CHECK_THROWS_AS(concatenation_check(std::span<const SymbolSequenceBlock>{}, target, 0.1), ConfigurationError);
}
