#include "coordkit/region.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "coordkit/binary.hpp"
#include "coordkit/errors.hpp"
#include "coordkit/rng.hpp"

namespace coordkit {

// ------------------------------------------------------------------ capacity

CapacityResult channel_capacity(const Kernel& channel, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw ConfigurationError("channel_capacity: tol must be > 0");
  const auto nx = channel.given_count(), ny = channel.target_count();
  std::vector<double> p(nx, 1.0 / static_cast<double>(nx)), out(ny), d(nx);

  auto divergences = [&] {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y) out[y] += p[x] * channel(x, y);
    for (std::size_t x = 0; x < nx; ++x) {
      double acc = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        const double t = channel(x, y);
        if (t > 0.0) acc += t * std::log2(t / out[y]);
      }
      d[x] = acc;
    }
  };
  auto information = [&] {
    double acc = 0.0;
    for (std::size_t x = 0; x < nx; ++x) acc += p[x] * d[x];
    return std::max(0.0, acc);
  };

  divergences();
  double cap = information();
  std::size_t it = 0;
  while (it < max_iters) {
    ++it;
    double z = 0.0;
    for (std::size_t x = 0; x < nx; ++x) z += (p[x] *= std::exp2(d[x]));
    for (auto& v : p) v /= z;
    divergences();
    const double next = information();
    const double upper = *std::max_element(d.begin(), d.end());
    const bool done = std::abs(next - cap) < tol || upper - next < tol;
    cap = next;
    if (done) break;
  }
  return {cap, FiniteDist({{axis::X, nx}}, std::move(p)), it};
}

// ---------------------------------------------------------------- membership

MembershipResult membership(const StrictInstance& inst, const MaximizeOptions& opts) {
  MembershipResult res;
  res.capacity = channel_capacity(inst.channel()).capacity;
  res.report = maximize_strict(inst, opts);
  res.source_target_information = mutual_information(inst.joint(), {axis::U}, {axis::V});
  if (res.capacity <= kNumericalZero) {
    res.zero_capacity_rule = true;
    res.verdict = res.source_target_information <= kNumericalZero ? Verdict::Achievable
                                                                   : Verdict::NotAchievable;
  } else {
    res.verdict = res.report.verdict;
  }
  return res;
}

// ------------------------------------------------------------------- utility

void UtilitySpec::validate() const {
  if (u_size == 0 || x_size == 0 || y_size == 0 || v_size == 0)
    throw InstanceFormatError("utility: alphabet sizes must be >= 1");
  if (phi.size() != u_size * x_size * y_size * v_size)
    throw InstanceFormatError("utility: phi has " + std::to_string(phi.size()) + " entries, expected " +
                              std::to_string(u_size * x_size * y_size * v_size));
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (!std::isfinite(phi[i]))
      throw InstanceFormatError("utility: phi[" + std::to_string(i) + "] is not finite");
  if (distortion && distortion->size() != u_size * v_size)
    throw InstanceFormatError("utility: distortion must have |U||V| entries");
  if (cost && cost->size() != x_size)
    throw InstanceFormatError("utility: cost must have |X| entries");
  auto finite = [](const std::vector<double>& t) {
    return std::all_of(t.begin(), t.end(), [](double v) { return std::isfinite(v); });
  };
  if ((distortion && !finite(*distortion)) || (cost && !finite(*cost)))
    throw InstanceFormatError("utility: distortion and cost entries must be finite");
}

UtilitySpec UtilitySpec::constant(const AlphabetProfile& p, double c) {
  UtilitySpec u{p.u_size, p.x_size, p.y_size, p.v_size, {}, {}, {}};
  u.phi.assign(p.u_size * p.x_size * p.y_size * p.v_size, c);
  u.validate();
  return u;
}

UtilitySpec UtilitySpec::from_distortion_cost(const AlphabetProfile& p,
                                              std::vector<double> distortion,
                                              std::vector<double> cost, double distortion_weight,
                                              double cost_weight) {
  UtilitySpec u{p.u_size, p.x_size, p.y_size, p.v_size, {}, std::move(distortion), std::move(cost)};
  if (u.distortion->size() != p.u_size * p.v_size || u.cost->size() != p.x_size)
    throw InstanceFormatError("utility: distortion must be |U|x|V| and cost |X|");
  u.phi.resize(p.u_size * p.x_size * p.y_size * p.v_size);
  for (std::size_t a = 0; a < p.u_size; ++a)
    for (std::size_t x = 0; x < p.x_size; ++x)
      for (std::size_t y = 0; y < p.y_size; ++y)
        for (std::size_t v = 0; v < p.v_size; ++v)
          u.phi[((a * p.x_size + x) * p.y_size + y) * p.v_size + v] =
              -distortion_weight * (*u.distortion)[a * p.v_size + v] - cost_weight * (*u.cost)[x];
  u.validate();
  return u;
}

namespace {

void check_utility_shape(const Kernel& target, const FiniteDist& source, const Kernel& channel,
                         const UtilitySpec& util) {
  util.validate();
  if (source.size() != util.u_size || channel.given_count() != util.x_size ||
      channel.target_count() != util.y_size || target.given_count() != util.u_size ||
      target.target_count() != util.x_size * util.v_size)
    throw InstanceFormatError("expected_utility: utility alphabets do not match the instance");
}

// Gradient of the (linear) expected utility w.r.t. Q(x,v|u).
std::vector<double> utility_gradient(const FiniteDist& source, const Kernel& channel,
                                     const UtilitySpec& util) {
  std::vector<double> g(util.u_size * util.x_size * util.v_size, 0.0);
  for (std::size_t u = 0; u < util.u_size; ++u)
    for (std::size_t x = 0; x < util.x_size; ++x)
      for (std::size_t v = 0; v < util.v_size; ++v) {
        double acc = 0.0;
        for (std::size_t y = 0; y < util.y_size; ++y) acc += channel(x, y) * util(u, x, y, v);
        g[(u * util.x_size + x) * util.v_size + v] = source[u] * acc;
      }
  return g;
}

}  // namespace

double expected_utility(const Kernel& target, const FiniteDist& source, const Kernel& channel,
                        const UtilitySpec& util) {
  check_utility_shape(target, source, channel, util);
  const auto g = utility_gradient(source, channel, util);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * target.data()[i];
  return acc;
}

// ------------------------------------------------------------------ families

Kernel distortion_cost_target(double alpha, double beta) {
  for (double v : {alpha, beta})
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("alpha and beta must lie in [0, 1]");
  std::vector<double> rows(8);
  const double qx[2] = {alpha, 1.0 - alpha};
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t v = 0; v < 2; ++v) rows[u * 4 + x * 2 + v] = qx[x] * (v == u ? 1.0 - beta : beta);
  return make_target(2, 2, 2, std::move(rows));
}

FamilySpec FamilySpec::coordination() { return FamilySpec{}; }

FamilySpec FamilySpec::distortion_cost(bool vary_beta, double fixed, double lo, double hi) {
  FamilySpec f;
  f.id = FamilyId::DistortionCostAlphaBeta;
  f.vary_beta = vary_beta;
  f.fixed = fixed;
  f.lo = lo;
  f.hi = hi;
  return f;
}

FamilySpec FamilySpec::user_linear(Kernel first, Kernel second) {
  if (first.given() != second.given() || first.target() != second.target())
    throw InstanceFormatError("user_linear family: endpoint kernels must share axes");
  FamilySpec f;
  f.id = FamilyId::UserLinear;
  f.lo = 0.0;
  f.hi = 1.0;
  f.first = std::move(first);
  f.second = std::move(second);
  return f;
}

Kernel FamilySpec::at(double param) const {
  if (!(param >= lo - 1e-12 && param <= hi + 1e-12))
    throw DomainError("family parameter " + std::to_string(param) + " outside [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  param = std::clamp(param, lo, hi);
  switch (id) {
    case FamilyId::CoordinationGamma:
      return game_family(param).target;
    case FamilyId::DistortionCostAlphaBeta:
      return vary_beta ? distortion_cost_target(fixed, param) : distortion_cost_target(param, fixed);
    case FamilyId::UserLinear: {
      if (!first || !second) throw InstanceFormatError("user_linear family needs two endpoints");
      std::vector<double> rows(first->data().size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = (1.0 - param) * first->data()[i] + param * second->data()[i];
      return Kernel(first->given(), first->target(), std::move(rows));
    }
  }
  throw InstanceFormatError("unknown family");
}

// ----------------------------------------------------------------- bisection

BisectionResult boundary_bisection_family(const FamilySpec& family, const FiniteDist& source,
                                          const Kernel& channel, BoundSelector bound,
                                          const BisectionOptions& opts) {
  if (!(opts.tol > 0.0)) throw ConfigurationError("bisection tol must be > 0");
  if (!(family.lo < family.hi)) throw ConfigurationError("family interval is empty");
  BisectionResult res;
  auto f = [&](double t) {
    ++res.evaluations;
    StrictInstance inst(source, channel, family.at(t));
    switch (bound) {
      case BoundSelector::Lower:
        return analytic_bounds(inst).lower;
      case BoundSelector::Upper:
        return analytic_bounds(inst).upper;
      case BoundSelector::Certified:
        return maximize_strict(inst, opts.strict).value;
    }
    return 0.0;
  };
  auto feasible = [](double v) { return v >= -1e-12; };

  double lo = family.lo, hi = family.hi;
  double flo = f(lo), fhi = f(hi);
  if (feasible(flo) == feasible(fhi)) {
    res.crossing = false;
    const bool take_hi = feasible(flo) || fhi > flo;
    res.param_star = take_hi ? hi : lo;
    res.constraint_at_star = take_hi ? fhi : flo;
    return res;
  }
  const bool feasible_low = feasible(flo);
  while (hi - lo >= opts.tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (feasible(fm) == feasible_low) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  res.param_star = feasible_low ? lo : hi;
  res.constraint_at_star = feasible_low ? flo : fhi;
  return res;
}

// ------------------------------------------------------------ utility ascent

namespace {

/// Constraint with the auxiliary kernel held fixed, on raw (possibly
/// unnormalized) target tables. Any fixed auxiliary gives a lower bound on
/// the maximized constraint.
class FixedAuxConstraint {
 public:
  FixedAuxConstraint(const FiniteDist& source, const Kernel& channel, std::size_t nv,
                     std::size_t nw)
      : nu_(source.size()),
        nx_(channel.given_count()),
        ny_(channel.target_count()),
        nv_(nv),
        nw_(nw),
        pu_(source.table().begin(), source.table().end()),
        t_(channel.data().begin(), channel.data().end()) {}

  double operator()(std::span<const double> q, std::span<const double> r) {
    p_u_.assign(nu_, 0.0);
    p_v_.assign(nv_, 0.0);
    p_vy_.assign(nv_ * ny_, 0.0);
    p_vw_.assign(nv_ * nw_, 0.0);
    p_vwy_.assign(nv_ * nw_ * ny_, 0.0);
    p_uvw_.assign(nu_ * nv_ * nw_, 0.0);
    for (std::size_t u = 0; u < nu_; ++u)
      for (std::size_t x = 0; x < nx_; ++x)
        for (std::size_t v = 0; v < nv_; ++v) {
          const std::size_t s = (u * nx_ + x) * nv_ + v;
          const double m = pu_[u] * q[s];
          if (m <= 0.0) continue;
          p_u_[u] += m;
          p_v_[v] += m;
          for (std::size_t y = 0; y < ny_; ++y) p_vy_[v * ny_ + y] += m * t_[x * ny_ + y];
          for (std::size_t w = 0; w < nw_; ++w) {
            const double mw = m * r[s * nw_ + w];
            if (mw <= 0.0) continue;
            p_vw_[v * nw_ + w] += mw;
            p_uvw_[(u * nv_ + v) * nw_ + w] += mw;
            for (std::size_t y = 0; y < ny_; ++y) p_vwy_[(v * nw_ + w) * ny_ + y] += mw * t_[x * ny_ + y];
          }
        }
    const double h_vw = entropy_bits(p_vw_);
    const double i_wy_v = h_vw + entropy_bits(p_vy_) - entropy_bits(p_v_) - entropy_bits(p_vwy_);
    const double i_u_vw = entropy_bits(p_u_) + h_vw - entropy_bits(p_uvw_);
    return i_wy_v - i_u_vw;
  }

 private:
  std::size_t nu_, nx_, ny_, nv_, nw_;
  std::vector<double> pu_, t_;
  std::vector<double> p_u_, p_v_, p_vy_, p_vw_, p_vwy_, p_uvw_;
};

/// Euclidean projection of each row onto the probability simplex.
void project_rows(std::vector<double>& q, std::size_t width) {
  std::vector<double> sorted(width);
  for (std::size_t r = 0; r * width < q.size(); ++r) {
    auto row = std::span<double>(q).subspan(r * width, width);
    std::copy(row.begin(), row.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      cum += sorted[k];
      const double t = (cum - 1.0) / static_cast<double>(k + 1);
      if (sorted[k] - t > 0.0) theta = t;
    }
    double z = 0.0;
    for (auto& v : row) z += (v = std::max(0.0, v - theta));
    for (auto& v : row) v /= z;
  }
}

struct UtilityCandidate {
  std::vector<double> q;
  double utility = -std::numeric_limits<double>::infinity();
  ConstraintReport report;
  std::string origin;
};

}  // namespace

MaxUtilityResult max_utility_generic(const FiniteDist& source, const Kernel& channel,
                                     const UtilitySpec& util, const MaxUtilityOptions& opts) {
  util.validate();
  if (source.size() != util.u_size || channel.given_count() != util.x_size ||
      channel.target_count() != util.y_size)
    throw InstanceFormatError("max_utility_generic: utility alphabets do not match the instance");
  if (!(opts.step > 0.0) || !(opts.fd_step > 0.0) || opts.certify_every < 1)
    throw ConfigurationError("max_utility_generic: step, fd_step and certify_every must be positive");

  const auto nu = util.u_size, nx = util.x_size, ny = util.y_size, nv = util.v_size;
  const auto width = nx * nv;
  const auto grad_u = utility_gradient(source, channel, util);
  auto utility_of = [&](std::span<const double> q) {
    return std::inner_product(grad_u.begin(), grad_u.end(), q.begin(), 0.0);
  };
  auto instance_of = [&](const std::vector<double>& q) {
    return StrictInstance(source, channel, make_target(nu, nx, nv, q));
  };
  auto certify = [&](const std::vector<double>& q, const std::optional<AuxKernelW>& warm) {
    auto so = opts.strict;
    if (warm) so.warm_starts = {*warm};
    return maximize_strict(instance_of(q), so);
  };

  // Seeds: independent V fallback, separation, uniform, random.
  std::vector<std::pair<std::string, std::vector<double>>> seeds;
  {
    std::vector<double> q(nu * width, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t vs = 0; vs < nv; ++vs) {
      std::vector<double> cand(nu * width, 0.0);
      for (std::size_t u = 0; u < nu; ++u) {
        std::size_t bx = 0;
        for (std::size_t x = 1; x < nx; ++x)
          if (grad_u[(u * nx + x) * nv + vs] > grad_u[(u * nx + bx) * nv + vs]) bx = x;
        cand[u * width + bx * nv + vs] = 1.0;
      }
      if (const double val = utility_of(cand); val > best) {
        best = val;
        q = std::move(cand);
      }
    }
    seeds.emplace_back("fallback", std::move(q));
  }
  {
    const auto cap = channel_capacity(channel);
    std::vector<double> q(nu * width, 0.0);
    for (std::size_t u = 0; u < nu; ++u) {
      std::size_t bv = 0;
      double bval = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < nv; ++v) {
        double acc = 0.0;
        for (std::size_t x = 0; x < nx; ++x)
          for (std::size_t y = 0; y < ny; ++y)
            acc += cap.argmax_input[x] * channel(x, y) * util(u, x, y, v);
        if (acc > bval) {
          bval = acc;
          bv = v;
        }
      }
      for (std::size_t x = 0; x < nx; ++x) q[u * width + x * nv + bv] = cap.argmax_input[x];
    }
    seeds.emplace_back("separation", std::move(q));
  }
  seeds.emplace_back("uniform", std::vector<double>(nu * width, 1.0 / static_cast<double>(width)));
  for (std::size_t k = 0; k < opts.restarts; ++k) {
    CounterRng rng(derive_seed(opts.seed, 0x7574696c697479ULL, k));
    std::vector<double> q(nu * width);
    for (std::size_t u = 0; u < nu; ++u) {
      double z = 0.0;
      for (std::size_t i = 0; i < width; ++i) z += (q[u * width + i] = rng.exponential());
      for (std::size_t i = 0; i < width; ++i) q[u * width + i] /= z;
    }
    seeds.emplace_back("random-" + std::to_string(k), std::move(q));
  }

  UtilityCandidate best;
  auto offer = [&](const std::vector<double>& q, const ConstraintReport& rep,
                   const std::string& origin) {
    if (rep.value < -kNumericalZero) return;
    const double val = utility_of(q);
    if (val > best.utility) best = {q, val, rep, origin};
  };

  const auto nw = instance_of(seeds.front().second).profile().default_w_size();
  FixedAuxConstraint fixed(source, channel, nv, nw);
  constexpr double kPenaltyCap = 1048576.0;

  for (const auto& [label, q0] : seeds) {
    auto rep = certify(q0, std::nullopt);
    offer(q0, rep, label);
    auto aux = *rep.certificate;
    std::optional<std::vector<double>> last_feasible;
    if (rep.value >= -kNumericalZero) last_feasible = q0;

    auto q = q0;
    double rho = 1.0;
    std::vector<double> grad(q.size()), probe, next;
    for (std::size_t it = 1; it <= opts.outer_iters; ++it) {
      const auto r = aux.kernel.data();
      const double c = fixed(q, r);
      std::copy(grad_u.begin(), grad_u.end(), grad.begin());
      if (c < 0.0) {
        probe = q;
        for (std::size_t i = 0; i < q.size(); ++i) {
          probe[i] = q[i] + opts.fd_step;
          const double up = fixed(probe, r);
          probe[i] = q[i] - opts.fd_step;
          const double down = fixed(probe, r);
          probe[i] = q[i];
          grad[i] += rho * (up - down) / (2.0 * opts.fd_step);
        }
      }
      const double f0 = utility_of(q) + rho * std::min(0.0, c);
      double alpha = opts.step;
      bool moved = false;
      double c_next = c;
      for (int h = 0; h < 30; ++h) {
        next = q;
        for (std::size_t i = 0; i < q.size(); ++i) next[i] += alpha * grad[i];
        project_rows(next, width);
        c_next = fixed(next, r);
        if (utility_of(next) + rho * std::min(0.0, c_next) > f0 + 1e-15) {
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (moved) q.swap(next);
      if ((moved ? c_next : c) < 0.0) rho = std::min(rho * 2.0, kPenaltyCap);

      if (it % opts.certify_every == 0 || it == opts.outer_iters || !moved) {
        rep = certify(q, aux);
        aux = *rep.certificate;
        if (rep.value >= -kNumericalZero) {
          offer(q, rep, label);
          last_feasible = q;
        }
      }
      if (!moved && c >= 0.0) break;
    }

    // Walk from the last certified point toward the final iterate.
    if (last_feasible && *last_feasible != q) {
      double lo = 0.0, hi = 1.0;
      std::vector<double> mix(q.size());
      for (int k = 0; k < 20; ++k) {
        const double t = 0.5 * (lo + hi);
        for (std::size_t i = 0; i < q.size(); ++i) mix[i] = (1.0 - t) * (*last_feasible)[i] + t * q[i];
        const auto mrep = certify(mix, aux);
        if (mrep.value >= -kNumericalZero) {
          lo = t;
          offer(mix, mrep, label);
        } else {
          hi = t;
        }
      }
    }
  }

  if (best.q.empty()) {
    // The independent-V fallback is always achievable; reached only when
    // certification failed numerically.
    best.q = seeds.front().second;
    best.report = certify(best.q, std::nullopt);
    best.origin = "fallback";
  }
  MaxUtilityResult res{make_target(nu, nx, nv, best.q), 0.0, std::move(best.report), best.origin,
                       best.origin == "fallback"};
  res.utility = expected_utility(res.target_star, source, channel, util);
  return res;
}

// -------------------------------------------------------- distortion-cost

RegionGrid distortion_cost_region(double p, double eps, double grid_step) {
  if (!(p >= 0.0 && p <= 1.0) || !(eps >= 0.0 && eps <= 1.0))
    throw DomainError("distortion_cost_region: p and eps must lie in [0, 1]");
  if (!(grid_step > 0.0) || grid_step > 1.0)
    throw ConfigurationError("distortion_cost_region: grid_step must lie in (0, 1]");
  RegionGrid g;
  g.p = p;
  g.eps = eps;
  g.step = grid_step;
  const auto count = static_cast<std::size_t>(std::floor(1.0 / grid_step + 1e-9));
  std::vector<double> values;
  for (std::size_t i = 0; i <= count; ++i) values.push_back(std::min(1.0, static_cast<double>(i) * grid_step));
  if (values.back() < 1.0 - 1e-12) values.push_back(1.0);
  g.d_values = values;
  g.c_values = values;
  g.cells.reserve(values.size() * values.size());
  for (double c : g.c_values)
    for (double d : g.d_values) {
      const double val = dc_constraint(c, d, p, eps);
      g.cells.push_back({d, c, val, val >= -1e-12});
    }
  return g;
}

}  // namespace coordkit
