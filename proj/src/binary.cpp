#include "coordkit/binary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coordkit/errors.hpp"

namespace coordkit {

namespace {

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
}

// Arguments built from parameters in [0, 1] can leave the interval by rounding.
double hb_inner(double x) { return hb(std::clamp(x, 0.0, 1.0)); }

}  // namespace

double hb(double x) {
  require_unit(x, "hb argument");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

CoordinationBounds coordination_bounds(const GameParams& gp) {
  require_unit(gp.p, "p");
  require_unit(gp.eps, "eps");
  require_unit(gp.gamma, "gamma");
  if (gp.p != 0.5) throw DomainError("coordination_bounds: closed forms hold only for p = 0.5");
  const double g = gp.gamma, e = gp.eps;
  const double base = hb(g) + (1.0 - g) * std::log2(3.0) - 1.0;
  const double a = 2.0 / 3.0 - 2.0 * g / 3.0;
  CoordinationBounds b;
  b.lower = base - hb_inner(a) - hb(e) + hb_inner(a + e * (4.0 * g - 1.0) / 3.0);
  const double w = (2.0 * g + 1.0) / 3.0;
  const double r = 3.0 * g / (2.0 * g + 1.0);
  const double s = (1.0 - g) / (2.0 * g + 1.0);
  b.upper = base - hb(e) + w * (hb_inner((1.0 - e) * r + e * s) - hb_inner(r));
  if (e == 0.0) b.perfect = base;
  return b;
}

double gamma_star(double eps, BoundKind bound) {
  if (!(eps >= 0.0 && eps <= 0.5)) throw DomainError("gamma_star: eps must lie in [0, 0.5]");
  auto f = [&](double g) {
    const auto b = coordination_bounds({0.5, eps, g});
    return bound == BoundKind::Lower ? b.lower : b.upper;
  };
  double lo = 0.25, hi = 1.0;
  if (f(lo) <= 0.0) return lo;
  while (hi - lo >= 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double dc_constraint(double alpha, double beta, double p, double eps) {
  require_unit(alpha, "alpha");
  require_unit(beta, "beta");
  require_unit(p, "p");
  require_unit(eps, "eps");
  return hb_inner(alpha * eps + (1.0 - alpha) * (1.0 - eps)) + hb(beta) - hb(eps) -
         hb_inner(beta * p + (1.0 - beta) * (1.0 - p));
}

GameFamily game_family(double gamma) {
  require_unit(gamma, "gamma");
  std::vector<double> rows(8);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t v = 0; v < 2; ++v)
        rows[u * 4 + x * 2 + v] = (x == u && v == u) ? gamma : (1.0 - gamma) / 3.0;
  UtilitySpec util;
  util.u_size = util.x_size = util.y_size = util.v_size = 2;
  util.phi.assign(16, 0.0);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t y = 0; y < 2; ++y) util.phi[((u * 2 + u) * 2 + y) * 2 + u] = 1.0;
  return {make_target(2, 2, 2, std::move(rows)), std::move(util)};
}

}  // namespace coordkit
