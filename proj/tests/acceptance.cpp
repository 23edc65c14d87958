// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for ctest).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "coordkit/binary.hpp"
#include "coordkit/errors.hpp"
#include "coordkit/sim.hpp"
#include "oracles.hpp"

using namespace coordkit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string num(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<double> table(const FiniteDist& d) { return {d.table().begin(), d.table().end()}; }

StrictInstance random_binary(oracle::Lcg& g) {
  return StrictInstance(make_source(g.simplex(2)), make_channel(2, 2, g.rows(2, 2)),
                        make_target(2, 2, 2, g.rows(2, 4)));
}

/// Q(x,v|u) = Q(x) Q(v|u).
Kernel product_target(oracle::Lcg& g) {
  const auto qx = g.simplex(2);
  const auto qv = g.rows(2, 2);
  std::vector<double> rows;
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t v = 0; v < 2; ++v) rows.push_back(qx[x] * qv[u * 2 + v]);
  return make_target(2, 2, 2, rows);
}

// ------------------------------------------------------------------ 1

Outcome example_sequences() {
  Outcome o;
  SymbolSequenceBlock b{{{axis::U, 2}, {axis::X, 2}, {axis::V, 2}},
                        {{0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1},
                         {0, 1, 1, 1, 0, 0, 1, 0, 0, 1, 0, 1},
                         {0, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1}}};
  const auto counts = empirical_counts(b);
  const std::vector<std::uint64_t> expected{3, 1, 1, 1, 1, 1, 1, 3};
  if (counts != expected) {
    o.pass = false;
    o.detail += "counts differ; ";
  }
  const auto emp = empirical_distribution(b);
  for (std::size_t k = 0; k < 8; ++k)
    if (emp[k] != static_cast<double>(expected[k]) / 12.0) o.pass = false;

  // Target Q(x,v|u) = empirical(u,x,v) / P(u) with P(u) = 1/2.
  std::vector<double> rows(8);
  for (std::size_t k = 0; k < 8; ++k) rows[k] = 2.0 * emp[k];
  const StrictInstance inst(make_source({0.5, 0.5}), identity_channel(2), make_target(2, 2, 2, rows));
  const double truth = 0.5 * std::log2(3.0);
  const auto bounds = analytic_bounds(inst);
  const double closed = bounds.perfect_channel_value.value_or(NAN);
  const auto r = maximize_strict(inst);
  o.pass = o.pass && std::abs(closed - truth) <= 1e-6 && std::abs(r.value - truth) <= 1e-6;
  o.detail += "closed form " + num(closed) + ", certified " + num(r.value) + ", expected " + num(truth);
  return o;
}

// ------------------------------------------------------------------ 2

Outcome perfect_channel_game() {
  Outcome o;
  double worst = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double g = 0.05 * i;
    const double expected = oracle::hb(g) + (1.0 - g) * std::log2(3.0) - 1.0;
    const auto b = coordination_bounds({0.5, 0.0, g});
    worst = std::max({worst, std::abs(b.lower - expected), std::abs(b.upper - expected)});
  }
  o.pass = worst <= 1e-9;
  o.detail = "worst deviation " + num(worst, 3) + " over 21 gamma values";
  return o;
}

// ------------------------------------------------------------------ 3

Outcome gamma_star_values() {
  Outcome o;
  const double g0 = gamma_star(0.0, BoundKind::Lower);
  const double g5 = gamma_star(0.5, BoundKind::Lower);
  const double lo = gamma_star(0.25, BoundKind::Lower);
  const double hi = gamma_star(0.25, BoundKind::Upper);
  const bool c0 = std::abs(g0 - 0.81) <= 0.005;
  const bool c5 = std::abs(g5 - 0.25) <= 1e-3;
  const bool in_range = lo >= 0.535 && lo <= 0.58 && hi >= 0.535 && hi <= 0.58;
  const bool brackets = lo <= 0.54 + 0.005 && hi >= 0.575 - 0.005;
  o.pass = c0 && c5 && in_range && brackets;
  o.detail = "gamma*(0) " + num(g0, 6) + ", gamma*(0.5) " + num(g5, 6) + ", eps 0.25 roots [" + num(lo, 6) + ", " +
             num(hi, 6) + "]";
  return o;
}

// ------------------------------------------------------------------ 4

Outcome sandwich_and_pinches() {
  Outcome o;
  oracle::Lcg g(2024);
  std::size_t sandwich_fail = 0, perfect_fail = 0, product_fail = 0;
  double worst_perfect = 0.0, worst_product = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = random_binary(g);
    const auto b = analytic_bounds(inst);
    const auto r = maximize_strict(inst);
    if (r.value < b.lower - 1e-8 || r.value > b.upper + 1e-8) ++sandwich_fail;
  }
  for (int i = 0; i < 50; ++i) {
    const StrictInstance inst(make_source(g.simplex(2)), identity_channel(2), make_target(2, 2, 2, g.rows(2, 4)));
    const auto ref = oracle::from_table({2, 2, 2, 2}, table(inst.joint()));
    // H(X|V) - I(U;X,V) over axes U X Y V
    const double expected = ref.h({1, 3}) - ref.h({3}) - ref.mi({0}, {1, 3});
    const double d = std::abs(maximize_strict(inst).value - expected);
    worst_perfect = std::max(worst_perfect, d);
    if (d > 1e-6) ++perfect_fail;
  }
  for (int i = 0; i < 50; ++i) {
    const StrictInstance inst(make_source(g.simplex(2)), make_channel(2, 2, g.rows(2, 2)), product_target(g));
    const auto ref = oracle::from_table({2, 2, 2, 2}, table(inst.joint()));
    const double expected = ref.mi({1}, {2}) - ref.mi({0}, {3});
    const double d = std::abs(maximize_strict(inst).value - expected);
    worst_product = std::max(worst_product, d);
    if (d > 1e-6) ++product_fail;
  }
  o.pass = sandwich_fail == 0 && perfect_fail == 0 && product_fail == 0;
  o.detail = "sandwich violations " + std::to_string(sandwich_fail) + "/200, perfect-channel worst " +
             num(worst_perfect, 3) + ", product worst " + num(worst_product, 3);
  return o;
}

// ------------------------------------------------------------------ 5

Outcome concavity_properties() {
  Outcome o;
  std::size_t midpoint_fail = 0;
  for (double e : {0.0, 0.05, 0.1, 0.25, 0.4, 0.5}) {
    std::vector<CoordinationBounds> b;
    for (int i = 0; i <= 100; ++i) b.push_back(coordination_bounds({0.5, e, 0.01 * i}));
    for (std::size_t i = 1; i + 1 < b.size(); ++i) {
      if (b[i].lower < 0.5 * (b[i - 1].lower + b[i + 1].lower) - 1e-12) ++midpoint_fail;
      if (b[i].upper < 0.5 * (b[i - 1].upper + b[i + 1].upper) - 1e-12) ++midpoint_fail;
    }
  }
  oracle::Lcg g(55);
  std::size_t pairs = 0, combo_fail = 0, tries = 0;
  double worst = 0.0;
  while (pairs < 50 && tries < 5000) {
    ++tries;
    const auto src = make_source(g.simplex(2));
    const auto ch = make_channel(2, 2, g.rows(2, 2));
    const StrictInstance a(src, ch, make_target(2, 2, 2, g.rows(2, 4)));
    const StrictInstance b(src, ch, make_target(2, 2, 2, g.rows(2, 4)));
    const auto ra = maximize_strict(a);
    if (ra.value < 0.0) continue;
    const auto rb = maximize_strict(b);
    if (rb.value < 0.0) continue;
    ++pairs;
    const double lambda = g.uniform();
    std::vector<double> mix(8);
    for (std::size_t k = 0; k < 8; ++k)
      mix[k] = lambda * a.target().data()[k] + (1.0 - lambda) * b.target().data()[k];
    const StrictInstance m(src, ch, make_target(2, 2, 2, mix));
    const double gap = maximize_strict(m).value - (lambda * ra.value + (1.0 - lambda) * rb.value);
    worst = std::min(worst, gap);
    if (gap < -1e-6) ++combo_fail;
  }
  o.pass = midpoint_fail == 0 && combo_fail == 0 && pairs == 50;
  o.detail = "midpoint violations " + std::to_string(midpoint_fail) + ", convex-combination violations " +
             std::to_string(combo_fail) + "/" + std::to_string(pairs) + " (worst gap " + num(worst, 3) + ")";
  return o;
}

// ------------------------------------------------------------------ 6

Outcome distortion_cost_grids() {
  Outcome o;
  std::ostringstream detail;
  for (auto [eps, p] : {std::pair{0.05, 0.5}, {0.25, 0.25}, {0.25, 0.5}}) {
    const auto grid = distortion_cost_region(p, eps, 0.01);
    auto nearest = [](const std::vector<double>& v, double x) {
      std::size_t best = 0;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (std::abs(v[i] - x) < std::abs(v[best] - x)) best = i;
      return best;
    };
    const auto& sym = grid.at(nearest(grid.c_values, 0.5), nearest(grid.d_values, eps));
    const bool boundary = std::abs(sym.constraint) <= 1e-9;
    bool half_row = true;
    const auto d_half = nearest(grid.d_values, 0.5);
    for (std::size_t i = 0; i < grid.c_values.size(); ++i) half_row = half_row && grid.at(i, d_half).achievable;
    bool intervals = true;
    for (std::size_t j = 0; j < grid.d_values.size(); ++j) {
      // At most one run of achievable cells.
      int runs = 0;
      for (std::size_t i = 0; i < grid.c_values.size(); ++i)
        runs += grid.at(i, j).achievable && (i == 0 || !grid.at(i - 1, j).achievable);
      if (runs > 1) intervals = false;
    }
    o.pass = o.pass && boundary && half_row && intervals;
    detail << "(eps " << eps << ", p " << p << "): symmetric-point constraint " << num(sym.constraint, 4)
           << (boundary ? "" : " NOT on boundary") << ", beta=0.5 achievable " << (half_row ? "yes" : "no")
           << ", intervals " << (intervals ? "yes" : "no") << "; ";
  }
  o.detail = detail.str();
  return o;
}

// ------------------------------------------------------------------ 7

Outcome zero_capacity_dichotomy() {
  Outcome o;
  oracle::Lcg g(7);
  const auto ch = binary_symmetric_channel(0.5);
  std::size_t wrong = 0, independent = 0;
  for (int i = 0; i < 100; ++i) {
    const auto src = make_source(g.simplex(2));
    std::vector<double> rows;
    if (i % 2 == 0) {
      // V independent of U, X arbitrary given (U, V).
      const auto qv = g.simplex(2);
      const auto qx = g.rows(4, 2);
      for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t x = 0; x < 2; ++x)
          for (std::size_t v = 0; v < 2; ++v) rows.push_back(qv[v] * qx[(u * 2 + v) * 2 + x]);
    } else {
      rows = g.rows(2, 4);
    }
    const StrictInstance inst(src, ch, make_target(2, 2, 2, rows));
    const auto ref = oracle::from_table({2, 2, 2, 2}, table(inst.joint()));
    const bool indep = ref.mi({0}, {3}) <= 1e-9;
    independent += indep;
    const auto m = membership(inst);
    if ((m.verdict == Verdict::Achievable) != indep) ++wrong;
  }
  o.pass = wrong == 0;
  o.detail = std::to_string(wrong) + " misclassified of 100 (" + std::to_string(independent) + " independent)";
  return o;
}

// --------------------------------------------------------------- 8, 9

struct SimLedger {
  bool mixing_ok = true;
  bool typicality_implication_ok = true;
  bool deterministic = true;
  std::size_t trials = 0;
};

SimLedger sim_ledger;

void audit(const SimScheme& scheme, std::size_t trials) {
  for (std::size_t t = 0; t < trials; ++t) {
    const auto r = run_trial(scheme, t);
    sim_ledger.mixing_ok = sim_ledger.mixing_ok && mixing_identity_holds(r);
    sim_ledger.typicality_implication_ok = sim_ledger.typicality_implication_ok && typicality_implication_holds(r, scheme.target(), scheme.config().eps_typ);
    ++sim_ledger.trials;
    if (t < 3) sim_ledger.deterministic = sim_ledger.deterministic && run_trial(scheme, t) == r;
  }
}

Outcome simulator_convergence() {
  Outcome o;
  const StrictInstance inst(make_source({0.1, 0.9}), identity_channel(2),
                            make_target(2, 2, 2, {0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5}));
  std::vector<MonteCarloSummary> runs;
  for (std::size_t n : {100u, 200u, 400u}) {
    CodeConfig cfg;
    cfg.n = n;
    cfg.blocks = 12;
    cfg.eps_typ = 0.1;
    cfg.seed = 8;
    try {
      const auto scheme = SimScheme::strict(inst, aux_equal_to_x(inst), cfg);
      audit(scheme, 50);
      runs.push_back(monte_carlo(scheme, 50));
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = "n = " + std::to_string(n) + ": construction refused: " + e.what();
      return o;
    }
  }
  const bool decreasing = runs[0].mean_tv_truncated > runs[1].mean_tv_truncated &&
                          runs[1].mean_tv_truncated > runs[2].mean_tv_truncated;
  const bool pe_ok = runs[2].pe <= runs[0].pe + runs[0].ci_halfwidth + runs[2].ci_halfwidth;
  o.pass = decreasing && pe_ok;
  o.detail = "mean tv_trunc " + num(runs[0].mean_tv_truncated, 4) + ", " + num(runs[1].mean_tv_truncated, 4) +
             ", " + num(runs[2].mean_tv_truncated, 4);
  return o;
}

Outcome simulator_invariants() {
  Outcome o;
  const StrictInstance product(make_source({0.5, 0.5}), binary_symmetric_channel(0.1),
                               make_target(2, 2, 2, {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25}));
  CodeConfig cfg;
  cfg.n = 100;
  cfg.blocks = 12;
  cfg.seed = 9;
  audit(SimScheme::strict(product, aux_equal_to_x(product), cfg), 50);
  audit(SimScheme::causal(causal_embedding(product, aux_equal_to_x(product)), cfg), 20);

  const StrictInstance indep(make_source({0.3, 0.7}), binary_symmetric_channel(0.5),
                             make_target(2, 2, 2, {0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4}));
  cfg.n = 400;
  audit(SimScheme::zero_capacity(indep, cfg), 50);

  o.pass = sim_ledger.mixing_ok && sim_ledger.typicality_implication_ok && sim_ledger.deterministic;
  o.detail = std::to_string(sim_ledger.trials) + " trials: mixing identity " + (sim_ledger.mixing_ok ? "exact" : "BROKEN") +
             ", block-typicality implication " + (sim_ledger.typicality_implication_ok ? "held" : "FALSIFIED") + ", reruns " +
             (sim_ledger.deterministic ? "identical" : "DIFFER");
  return o;
}

// ----------------------------------------------------------------- 10

Outcome causal_sanity() {
  Outcome o;
  const StrictInstance product(make_source({0.5, 0.5}), binary_symmetric_channel(0.25),
                               make_target(2, 2, 2, {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25}));
  const double ixy = 1.0 - oracle::hb(0.25);
  const auto rp = maximize_causal(causal_from_strict(product));
  const bool product_ok = rp.value >= ixy - 1e-6 && rp.verdict == Verdict::Achievable;

  oracle::Lcg g(10);
  std::size_t below = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto inst = random_binary(g);
    const double strict = maximize_strict(inst).value;
    const auto rc = maximize_causal(causal_from_strict(inst));
    const double gap = rc.value - strict;
    worst = std::min(worst, gap);
    if (gap < -1e-6) ++below;
  }
  o.pass = product_ok && below == 0;
  o.detail = "product target " + num(rp.value) + " vs I(X;Y) " + num(ixy) + "; causal below strict on " +
             std::to_string(below) + "/20 (worst gap " + num(worst, 3) + ")";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "example sequences and perfect-channel value", 1.0, example_sequences},
      {2, "game bounds coincide at a perfect channel", 1.0, perfect_channel_game},
      {3, "boundary gamma values", 1.0, gamma_star_values},
      {4, "sandwich bounds and closed-form pinches", 120.0, sandwich_and_pinches},
      {5, "concavity and convex combinations", 300.0, concavity_properties},
      {6, "distortion-cost region grids", 5.0, distortion_cost_grids},
      {7, "zero-capacity dichotomy", 60.0, zero_capacity_dichotomy},
      {8, "simulator convergence", 600.0, simulator_convergence},
      {9, "simulator exact invariants", 600.0, simulator_invariants},
      {10, "causal evaluator sanity", 300.0, causal_sanity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.time_limit_s) {
      out.pass = false;
      out.detail += "; over time limit";
    }
    failed += out.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s (%.2f s): %s\n", c.id, out.pass ? "PASS" : "FAIL", c.title, secs,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
