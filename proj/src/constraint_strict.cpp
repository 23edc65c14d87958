#include <algorithm>
#include <cmath>
#include <limits>

#include "coordkit/constraint.hpp"
#include "coordkit/errors.hpp"
#include "coordkit/rng.hpp"

namespace coordkit {

// ------------------------------------------------------------------ builders

FiniteDist make_source(std::vector<double> p) {
  const auto n = p.size();
  return FiniteDist({{axis::U, n}}, std::move(p));
}

Kernel make_channel(std::size_t x_size, std::size_t y_size, std::vector<double> rows) {
  return Kernel({{axis::X, x_size}}, {{axis::Y, y_size}}, std::move(rows));
}

Kernel make_target(std::size_t u_size, std::size_t x_size, std::size_t v_size,
                   std::vector<double> rows) {
  return Kernel({{axis::U, u_size}}, {{axis::X, x_size}, {axis::V, v_size}}, std::move(rows));
}

Kernel binary_symmetric_channel(double crossover) {
  if (!(crossover >= 0.0 && crossover <= 1.0))
    throw DomainError("binary symmetric channel: crossover must lie in [0, 1]");
  return make_channel(2, 2, {1.0 - crossover, crossover, crossover, 1.0 - crossover});
}

Kernel identity_channel(std::size_t k) {
  std::vector<double> rows(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) rows[i * k + i] = 1.0;
  return make_channel(k, k, std::move(rows));
}

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Achievable:
      return "Achievable";
    case Verdict::NotAchievable:
      return "NotAchievable";
    case Verdict::Undetermined:
      return "Undetermined";
  }
  return "Undetermined";
}

// ------------------------------------------------------------ StrictInstance

StrictInstance::StrictInstance(FiniteDist source, Kernel channel, Kernel target)
    : source_(std::move(source)), channel_(std::move(channel)), target_(std::move(target)) {
  if (source_.rank() != 1 || source_.axes()[0].name != axis::U)
    throw InstanceFormatError("instance: source must be a distribution over axis U");
  if (channel_.given().size() != 1 || channel_.given()[0].name != axis::X ||
      channel_.target().size() != 1 || channel_.target()[0].name != axis::Y)
    throw InstanceFormatError("instance: channel must be a kernel Y|X");
  if (target_.given().size() != 1 || target_.given()[0].name != axis::U ||
      target_.target().size() != 2 || target_.target()[0].name != axis::X ||
      target_.target()[1].name != axis::V)
    throw InstanceFormatError("instance: target must be a kernel (X,V)|U");
  profile_.u_size = source_.axes()[0].size;
  profile_.x_size = channel_.given()[0].size;
  profile_.y_size = channel_.target()[0].size;
  profile_.v_size = target_.target()[1].size;
  if (target_.given()[0].size != profile_.u_size)
    throw InstanceFormatError("instance: target has " + std::to_string(target_.given()[0].size) +
                              " source rows but |U| = " + std::to_string(profile_.u_size));
  if (target_.target()[0].size != profile_.x_size)
    throw InstanceFormatError("instance: target X alphabet (" +
                              std::to_string(target_.target()[0].size) +
                              ") differs from channel input alphabet (" +
                              std::to_string(profile_.x_size) + ")");
  profile_.validate();
}

// --------------------------------------------------------------- AuxKernelW

namespace {

AxisList aux_given(const StrictInstance& inst) {
  const auto& p = inst.profile();
  return {{axis::U, p.u_size}, {axis::X, p.x_size}, {axis::V, p.v_size}};
}

std::size_t resolve_w_size(const StrictInstance& inst, std::optional<std::size_t> w) {
  const auto size = w.value_or(inst.profile().default_w_size());
  if (size < 1) throw ConfigurationError("w_size must be >= 1");
  return size;
}

}  // namespace

AuxKernelW make_aux(const StrictInstance& inst, std::size_t w_size, std::vector<double> rows) {
  if (w_size < 1) throw ConfigurationError("w_size must be >= 1");
  Kernel k(aux_given(inst), {{axis::W, w_size}}, std::move(rows));
  return AuxKernelW{w_size, std::move(k), w_size > inst.profile().default_w_size()};
}

AuxKernelW aux_equal_to_x(const StrictInstance& inst, std::optional<std::size_t> w_size) {
  const auto nw = resolve_w_size(inst, w_size);
  const auto& p = inst.profile();
  if (nw < p.x_size)
    throw ConfigurationError("W = X needs w_size >= |X| = " + std::to_string(p.x_size));
  std::vector<double> rows(p.u_size * p.x_size * p.v_size * nw, 0.0);
  for (std::size_t u = 0; u < p.u_size; ++u)
    for (std::size_t x = 0; x < p.x_size; ++x)
      for (std::size_t v = 0; v < p.v_size; ++v)
        rows[((u * p.x_size + x) * p.v_size + v) * nw + x] = 1.0;
  return make_aux(inst, nw, std::move(rows));
}

AuxKernelW aux_degenerate(const StrictInstance& inst, std::optional<std::size_t> w_size) {
  const auto nw = resolve_w_size(inst, w_size);
  const auto& p = inst.profile();
  std::vector<double> rows(p.u_size * p.x_size * p.v_size * nw, 0.0);
  for (std::size_t s = 0; s < p.u_size * p.x_size * p.v_size; ++s) rows[s * nw] = 1.0;
  return make_aux(inst, nw, std::move(rows));
}

FiniteDist strict_aux_joint(const StrictInstance& inst, const AuxKernelW& aux) {
  const auto& p = inst.profile();
  if (aux.kernel.given() != aux_given(inst) || aux.kernel.target().size() != 1)
    throw InstanceFormatError("auxiliary kernel must be W|(U,X,V) over the instance alphabets");
  const auto nw = aux.kernel.target_count();
  const auto nu = p.u_size, nx = p.x_size, ny = p.y_size, nv = p.v_size;
  std::vector<double> t(nu * nx * ny * nv * nw, 0.0);
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t v = 0; v < nv; ++v) {
        const double q = inst.source()[u] * inst.target()(u, x * nv + v);
        const std::size_t s = (u * nx + x) * nv + v;
        for (std::size_t y = 0; y < ny; ++y)
          for (std::size_t w = 0; w < nw; ++w)
            t[(((u * nx + x) * ny + y) * nv + v) * nw + w] =
                q * inst.channel()(x, y) * aux.kernel(s, w);
      }
  return FiniteDist({{axis::U, nu}, {axis::X, nx}, {axis::Y, ny}, {axis::V, nv}, {axis::W, nw}},
                    std::move(t));
}

// ---------------------------------------------------------- decomposition

DecompositionResult decomposition_check(const FiniteDist& joint, const FiniteDist& source,
                                        const Kernel& channel, DecompositionMode mode) {
  const AxisList expected{{axis::U, source.size()},
                          {axis::X, channel.given_count()},
                          {axis::Y, channel.target_count()},
                          {axis::V, joint.rank() == 4 ? joint.axes()[3].size : 0}};
  if (joint.axes() != expected)
    throw InstanceFormatError("decomposition_check: joint must be over (U,X,Y,V) matching the "
                              "source and channel alphabets");
  const auto nu = expected[0].size, nx = expected[1].size, ny = expected[2].size,
             nv = expected[3].size;
  std::vector<double> recon(joint.size(), 0.0);
  if (mode == DecompositionMode::Strict) {
    const auto q = conditional(joint, {axis::X, axis::V}, {axis::U});
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
          for (std::size_t v = 0; v < nv; ++v)
            recon[((u * nx + x) * ny + y) * nv + v] = source[u] * q(u, x * nv + v) * channel(x, y);
  } else {
    const auto qx = conditional(joint, {axis::X}, {axis::U});
    const auto qv = conditional(joint, {axis::V}, {axis::U, axis::X, axis::Y});
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
          for (std::size_t v = 0; v < nv; ++v)
            recon[((u * nx + x) * ny + y) * nv + v] =
                source[u] * qx(u, x) * channel(x, y) * qv((u * nx + x) * ny + y, v);
  }
  double dev = 0.0;
  for (std::size_t i = 0; i < recon.size(); ++i) dev = std::max(dev, std::abs(recon[i] - joint[i]));
  return {dev <= 1e-7, dev};
}

// ------------------------------------------------------------------ objective

double objective_strict(const StrictInstance& inst, const AuxKernelW& aux) {
  const auto j = strict_aux_joint(inst, aux);
  return mutual_information(j, {axis::W}, {axis::Y}, {axis::V}) -
         mutual_information(j, {axis::U}, {axis::V, axis::W});
}

AnalyticBounds analytic_bounds(const StrictInstance& inst) {
  const auto j = inst.joint();
  AnalyticBounds b;
  b.lower = mutual_information(j, {axis::X}, {axis::Y}, {axis::V}) -
            mutual_information(j, {axis::U}, {axis::V, axis::X});
  b.upper = mutual_information(j, {axis::X}, {axis::Y}, {axis::U, axis::V}) -
            mutual_information(j, {axis::U}, {axis::V});
  if (inst.channel().is_permutation()) {
    b.perfect_channel_value = entropy(j, {axis::X, axis::V}) - entropy(j, {axis::V}) -
                              mutual_information(j, {axis::U}, {axis::X, axis::V});
  }
  const auto uv = marginal(j, {axis::U, axis::V});
  const auto xy = marginal(j, {axis::X, axis::Y});
  const auto& p = inst.profile();
  bool factorizes = true;
  for (std::size_t u = 0; u < p.u_size && factorizes; ++u)
    for (std::size_t x = 0; x < p.x_size && factorizes; ++x)
      for (std::size_t y = 0; y < p.y_size && factorizes; ++y)
        for (std::size_t v = 0; v < p.v_size; ++v) {
          const double lhs = j[((u * p.x_size + x) * p.y_size + y) * p.v_size + v];
          const double rhs = uv[u * p.v_size + v] * xy[x * p.y_size + y];
          if (std::abs(lhs - rhs) > 1e-9) {
            factorizes = false;
            break;
          }
        }
  if (factorizes)
    b.product_value = mutual_information(j, {axis::X}, {axis::Y}) -
                      mutual_information(j, {axis::U}, {axis::V});
  return b;
}

// ------------------------------------------------------------ DC ascent

namespace {

// Dense tables for the inner problem. Rows s = (u,x,v) of the auxiliary
// kernel r(w|s) are the optimization variable.
class StrictEngine {
 public:
  StrictEngine(const StrictInstance& inst, std::size_t nw)
      : nu_(inst.profile().u_size),
        nx_(inst.profile().x_size),
        ny_(inst.profile().y_size),
        nv_(inst.profile().v_size),
        nw_(nw),
        ns_(nu_ * nx_ * nv_),
        q_(ns_),
        t_(inst.channel().data().begin(), inst.channel().data().end()),
        p_vw_(nv_ * nw_),
        p_vwy_(nv_ * nw_ * ny_),
        p_uvw_(nu_ * nv_ * nw_) {
    for (std::size_t u = 0; u < nu_; ++u)
      for (std::size_t x = 0; x < nx_; ++x)
        for (std::size_t v = 0; v < nv_; ++v)
          q_[(u * nx_ + x) * nv_ + v] = inst.source()[u] * inst.target()(u, x * nv_ + v);
    std::vector<double> p_v(nv_, 0.0), p_vy(nv_ * ny_, 0.0), p_u(nu_, 0.0);
    for (std::size_t s = 0; s < ns_; ++s) {
      const auto [u, x, v] = split(s);
      p_v[v] += q_[s];
      p_u[u] += q_[s];
      for (std::size_t y = 0; y < ny_; ++y) p_vy[v * ny_ + y] += q_[s] * t_[x * ny_ + y];
    }
    h_y_given_v_ = entropy_bits(p_vy) - entropy_bits(p_v);
    h_u_ = entropy_bits(p_u);
  }

  std::size_t rows() const noexcept { return ns_; }
  std::size_t width() const noexcept { return nw_; }
  double row_weight(std::size_t s) const noexcept { return q_[s]; }

  struct Index {
    std::size_t u, x, v;
  };
  Index split(std::size_t s) const noexcept {
    return {s / (nx_ * nv_), (s / nv_) % nx_, s % nv_};
  }

  void update_marginals(std::span<const double> r) {
    std::fill(p_vw_.begin(), p_vw_.end(), 0.0);
    std::fill(p_vwy_.begin(), p_vwy_.end(), 0.0);
    std::fill(p_uvw_.begin(), p_uvw_.end(), 0.0);
    for (std::size_t s = 0; s < ns_; ++s) {
      if (q_[s] <= 0.0) continue;
      const auto [u, x, v] = split(s);
      for (std::size_t w = 0; w < nw_; ++w) {
        const double m = q_[s] * r[s * nw_ + w];
        if (m <= 0.0) continue;
        p_vw_[v * nw_ + w] += m;
        p_uvw_[(u * nv_ + v) * nw_ + w] += m;
        for (std::size_t y = 0; y < ny_; ++y) p_vwy_[(v * nw_ + w) * ny_ + y] += m * t_[x * ny_ + y];
      }
    }
  }

  double h_y_given_vw() const { return entropy_bits(p_vwy_) - entropy_bits(p_vw_); }
  double h_u_given_vw() const { return entropy_bits(p_uvw_) - entropy_bits(p_vw_); }

  /// I(W;Y|V) - I(U;V,W) = [H(Y|V) - H(Y|V,W)] - [H(U) - H(U|V,W)].
  double objective(std::span<const double> r) {
    update_marginals(r);
    return (h_y_given_v_ - h_y_given_vw()) - (h_u_ - h_u_given_vw());
  }

  /// Per-row scaled gradient of -H(Y|V,W) at the current marginals:
  /// sum_y T(y|x) log2 p(y|v,w). Entries with r = 0 are left at 0.
  void convex_gradient(std::span<const double> r, std::vector<double>& out) const {
    out.assign(ns_ * nw_, 0.0);
    for (std::size_t s = 0; s < ns_; ++s) {
      if (q_[s] <= 0.0) continue;
      const auto [u, x, v] = split(s);
      for (std::size_t w = 0; w < nw_; ++w) {
        if (r[s * nw_ + w] <= 0.0) continue;
        const double pvw = p_vw_[v * nw_ + w];
        double acc = 0.0;
        for (std::size_t y = 0; y < ny_; ++y) {
          const double ty = t_[x * ny_ + y];
          if (ty > 0.0) acc += ty * std::log2(p_vwy_[(v * nw_ + w) * ny_ + y] / pvw);
        }
        out[s * nw_ + w] = acc;
      }
    }
  }

  /// Per-row scaled gradient of H(U|V,W): -log2 p(u|v,w).
  double concave_gradient(std::size_t s, std::size_t w) const {
    const auto [u, x, v] = split(s);
    (void)x;
    return -std::log2(p_uvw_[(u * nv_ + v) * nw_ + w] / p_vw_[v * nw_ + w]);
  }

 private:
  std::size_t nu_, nx_, ny_, nv_, nw_, ns_;
  std::vector<double> q_;
  std::vector<double> t_;
  std::vector<double> p_vw_, p_vwy_, p_uvw_;
  double h_y_given_v_ = 0.0;
  double h_u_ = 0.0;
};

struct AscentResult {
  std::vector<double> r;
  double value = 0.0;
  std::size_t iterations = 0;
  std::vector<double> trace;
};

// Exponentiated-gradient step on each row with q > 0; zero entries stay zero.
void mirror_step(const StrictEngine& e, std::span<const double> r, std::span<const double> grad,
                 double eta, std::vector<double>& out) {
  const auto nw = e.width();
  out.assign(r.begin(), r.end());
  for (std::size_t s = 0; s < e.rows(); ++s) {
    if (e.row_weight(s) <= 0.0) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < nw; ++w)
      if (r[s * nw + w] > 0.0) top = std::max(top, eta * grad[s * nw + w]);
    double z = 0.0;
    for (std::size_t w = 0; w < nw; ++w) {
      const double cur = r[s * nw + w];
      const double nv = cur > 0.0 ? cur * std::exp(eta * grad[s * nw + w] - top) : 0.0;
      out[s * nw + w] = nv;
      z += nv;
    }
    for (std::size_t w = 0; w < nw; ++w) out[s * nw + w] /= z;
  }
}

AscentResult dc_ascent(StrictEngine& e, std::vector<double> r, const MaximizeOptions& o) {
  AscentResult res;
  const auto nw = e.width();
  double f = e.objective(r);
  res.trace.push_back(f);
  std::vector<double> lin, grad(r.size()), cand, inner;
  double eta = 1.0;

  for (std::size_t it = 0; it < o.max_iters; ++it) {
    e.update_marginals(r);
    e.convex_gradient(r, lin);

    // Concave surrogate: linearized convex part plus H(U|V,W).
    auto surrogate = [&](std::span<const double> rr) {
      e.update_marginals(rr);
      double lin_part = 0.0;
      for (std::size_t s = 0; s < e.rows(); ++s) {
        const double q = e.row_weight(s);
        if (q <= 0.0) continue;
        for (std::size_t w = 0; w < nw; ++w) lin_part += q * lin[s * nw + w] * rr[s * nw + w];
      }
      return lin_part + e.h_u_given_vw();
    };

    inner = r;
    double s_cur = surrogate(inner);
    for (std::size_t k = 0; k < o.inner_iters; ++k) {
      // marginals currently belong to `inner`
      for (std::size_t s = 0; s < e.rows(); ++s) {
        if (e.row_weight(s) <= 0.0) continue;
        for (std::size_t w = 0; w < nw; ++w)
          grad[s * nw + w] =
              inner[s * nw + w] > 0.0 ? lin[s * nw + w] + e.concave_gradient(s, w) : 0.0;
      }
      bool accepted = false;
      double s_new = s_cur;
      for (int halving = 0; halving < 40; ++halving) {
        mirror_step(e, inner, grad, eta, cand);
        s_new = surrogate(cand);
        if (s_new > s_cur) {
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) break;
      const double gain = s_new - s_cur;
      inner.swap(cand);
      s_cur = s_new;
      eta = std::min(eta * 2.0, 1e3);
      if (gain < 0.1 * o.tol) break;
    }

    const double f_new = e.objective(inner);
    if (!std::isfinite(f_new)) throw NumericError("maximize_strict: non-finite objective");
    ++res.iterations;
    if (f_new < f) break;  // minorant guarantees ascent; anything else is rounding
    const double improvement = f_new - f;
    r.swap(inner);
    f = f_new;
    res.trace.push_back(f);
    if (improvement < o.tol) break;
  }
  res.r = std::move(r);
  res.value = f;
  return res;
}

struct Start {
  std::string label;
  std::vector<double> r;
};

std::vector<Start> strict_starts(const StrictInstance& inst, std::size_t nw,
                                 const MaximizeOptions& o) {
  const auto& p = inst.profile();
  const std::size_t ns = p.u_size * p.x_size * p.v_size;
  std::vector<Start> out;
  auto deterministic = [&](auto map) {
    std::vector<double> r(ns * nw, 0.0);
    for (std::size_t u = 0; u < p.u_size; ++u)
      for (std::size_t x = 0; x < p.x_size; ++x)
        for (std::size_t v = 0; v < p.v_size; ++v)
          r[((u * p.x_size + x) * p.v_size + v) * nw + map(x, v)] = 1.0;
    return r;
  };
  if (nw >= p.x_size) out.push_back({"w=x", deterministic([](std::size_t x, std::size_t) { return x; })});
  if (nw >= p.x_size * p.v_size)
    out.push_back({"w=(x,v)", deterministic([&](std::size_t x, std::size_t v) {
                     return x * p.v_size + v;
                   })});
  out.push_back({"constant", deterministic([](std::size_t, std::size_t) { return std::size_t{0}; })});
  if (nw >= p.x_size) {
    auto r = deterministic([](std::size_t x, std::size_t) { return x; });
    for (auto& v : r) v = 0.9 * v + 0.1 / static_cast<double>(nw);
    out.push_back({"w=x smoothed", std::move(r)});
  }
  for (std::size_t k = 0; k < o.warm_starts.size(); ++k) {
    const auto& ws = o.warm_starts[k];
    if (ws.w_size != nw)
      throw ConfigurationError("warm start " + std::to_string(k) + " has w_size " +
                               std::to_string(ws.w_size) + ", expected " + std::to_string(nw));
    out.push_back({"warm-" + std::to_string(k),
                   std::vector<double>(ws.kernel.data().begin(), ws.kernel.data().end())});
  }
  for (std::size_t k = 0; k < o.restarts; ++k) {
    CounterRng rng(derive_seed(o.seed, 0x73747269637400ULL, k));
    std::vector<double> r(ns * nw);
    for (std::size_t s = 0; s < ns; ++s) {
      double z = 0.0;
      for (std::size_t w = 0; w < nw; ++w) z += (r[s * nw + w] = rng.exponential());
      for (std::size_t w = 0; w < nw; ++w) r[s * nw + w] /= z;
    }
    out.push_back({"random-" + std::to_string(k), std::move(r)});
  }
  return out;
}

Verdict sandwich_verdict(double value, double upper) {
  if (value >= -kNumericalZero) return Verdict::Achievable;
  if (upper < -kNumericalZero) return Verdict::NotAchievable;
  return Verdict::Undetermined;
}

}  // namespace

ConstraintReport maximize_strict(const StrictInstance& inst, const MaximizeOptions& opts) {
  const auto nw = resolve_w_size(inst, opts.w_size);
  if (opts.max_iters < 1) throw ConfigurationError("max_iters must be >= 1");
  if (!(opts.tol > 0.0)) throw ConfigurationError("tol must be > 0");

  StrictEngine engine(inst, nw);
  const auto starts = strict_starts(inst, nw, opts);

  ConstraintReport rep;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_r;
  for (const auto& start : starts) {
    auto res = dc_ascent(engine, start.r, opts);
    rep.iterations += res.iterations;
    if (opts.record_trace) rep.traces.push_back(res.trace);
    if (res.value > best) {
      best = res.value;
      best_r = std::move(res.r);
      rep.best_start = start.label;
    }
  }
  rep.restarts_used = starts.size();

  rep.certificate = make_aux(inst, nw, std::move(best_r));
  rep.value = objective_strict(inst, *rep.certificate);
  const auto bounds = analytic_bounds(inst);
  rep.lower_bound = bounds.lower;
  rep.upper_bound = bounds.upper;
  if (bounds.perfect_channel_value)
    rep.closed_form = ClosedForm{"perfect-channel", *bounds.perfect_channel_value};
  else if (bounds.product_value)
    rep.closed_form = ClosedForm{"product", *bounds.product_value};
  rep.verdict = sandwich_verdict(rep.value, rep.upper_bound);
  return rep;
}

double rate_margin(const StrictInstance& inst, const MaximizeOptions& opts) {
  return std::max(0.0, maximize_strict(inst, opts).value);
}

}  // namespace coordkit
