#include <algorithm>
#include <cmath>
#include <limits>

#include "coordkit/constraint.hpp"
#include "coordkit/errors.hpp"
#include "coordkit/rng.hpp"

namespace coordkit {

// ----------------------------------------------------------- CausalStructure

CausalStructure::CausalStructure(FiniteDist source, Kernel channel, Kernel front, Kernel back)
    : source_(std::move(source)),
      channel_(std::move(channel)),
      front_(std::move(front)),
      back_(std::move(back)) {
  if (source_.rank() != 1 || source_.axes()[0].name != axis::U)
    throw InstanceFormatError("causal structure: source must be over axis U");
  if (channel_.given().size() != 1 || channel_.given()[0].name != axis::X ||
      channel_.target().size() != 1 || channel_.target()[0].name != axis::Y)
    throw InstanceFormatError("causal structure: channel must be a kernel Y|X");
  const auto nu = source_.size();
  const auto nx = channel_.given_count();
  const auto ny = channel_.target_count();
  const auto& ft = front_.target();
  if (front_.given() != AxisList{{axis::U, nu}} || ft.size() != 3 || ft[0] != Axis{axis::X, nx} ||
      ft[1].name != axis::W1 || ft[2].name != axis::W2)
    throw InstanceFormatError("causal structure: front must be a kernel (X,W1,W2)|U");
  const auto n2 = ft[2].size;
  if (back_.given() != AxisList{{axis::Y, ny}, {axis::W2, n2}} || back_.target().size() != 1 ||
      back_.target()[0].name != axis::V)
    throw InstanceFormatError("causal structure: back must be a kernel V|(Y,W2)");
  const auto ceiling = nu * nx * ny * back_.target_count() + 2;
  overridden_ = ft[1].size > ceiling || n2 > ceiling;
}

FiniteDist CausalStructure::joint() const {
  const auto nu = source_.size(), nx = channel_.given_count(), ny = channel_.target_count();
  const auto n1 = w1_size(), n2 = w2_size(), nv = back_.target_count();
  std::vector<double> t(nu * nx * n1 * n2 * ny * nv, 0.0);
  std::size_t i = 0;
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t w1 = 0; w1 < n1; ++w1)
        for (std::size_t w2 = 0; w2 < n2; ++w2) {
          const double f = source_[u] * front_(u, (x * n1 + w1) * n2 + w2);
          for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t v = 0; v < nv; ++v, ++i)
              t[i] = f * channel_(x, y) * back_(y * n2 + w2, v);
        }
  return FiniteDist({{axis::U, nu},
                     {axis::X, nx},
                     {axis::W1, n1},
                     {axis::W2, n2},
                     {axis::Y, ny},
                     {axis::V, nv}},
                    std::move(t));
}

CausalObjective objective_causal(const CausalStructure& s) {
  const auto j = s.joint();
  const double value = mutual_information(j, {axis::W1}, {axis::Y}, {axis::W2}) -
                       mutual_information(j, {axis::W1, axis::W2}, {axis::U});
  return {value, conditional(j, {axis::V}, {axis::U, axis::X, axis::Y}),
          conditional(j, {axis::X}, {axis::U})};
}

// ----------------------------------------------------------- CausalInstance

void CausalInstance::validate() const {
  if (source.rank() != 1 || source.axes()[0].name != axis::U)
    throw InstanceFormatError("causal instance: source must be over axis U");
  if (channel.given().size() != 1 || channel.given()[0].name != axis::X ||
      channel.target().size() != 1 || channel.target()[0].name != axis::Y)
    throw InstanceFormatError("causal instance: channel must be a kernel Y|X");
  const auto nu = source.size(), nx = channel.given_count(), ny = channel.target_count();
  if (target_x.given() != AxisList{{axis::U, nu}} || target_x.target() != AxisList{{axis::X, nx}})
    throw InstanceFormatError("causal instance: target_x must be a kernel X|U over the source and "
                              "channel alphabets");
  if (target_v.given() != AxisList{{axis::U, nu}, {axis::X, nx}, {axis::Y, ny}} ||
      target_v.target().size() != 1 || target_v.target()[0].name != axis::V)
    throw InstanceFormatError("causal instance: target_v must be a kernel V|(U,X,Y)");
}

FiniteDist CausalInstance::joint() const {
  validate();
  const auto nu = source.size(), nx = channel.given_count(), ny = channel.target_count();
  const auto nv = target_v.target_count();
  std::vector<double> t(nu * nx * ny * nv);
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t v = 0; v < nv; ++v)
          t[((u * nx + x) * ny + y) * nv + v] =
              source[u] * target_x(u, x) * channel(x, y) * target_v((u * nx + x) * ny + y, v);
  return FiniteDist({{axis::U, nu}, {axis::X, nx}, {axis::Y, ny}, {axis::V, nv}}, std::move(t));
}

CausalInstance causal_from_strict(const StrictInstance& inst) {
  const auto& p = inst.profile();
  std::vector<double> tx(p.u_size * p.x_size, 0.0);
  std::vector<double> tv(p.u_size * p.x_size * p.y_size * p.v_size, 0.0);
  for (std::size_t u = 0; u < p.u_size; ++u)
    for (std::size_t x = 0; x < p.x_size; ++x) {
      double m = 0.0;
      for (std::size_t v = 0; v < p.v_size; ++v) m += inst.target()(u, x * p.v_size + v);
      tx[u * p.x_size + x] = m;
      for (std::size_t y = 0; y < p.y_size; ++y)
        for (std::size_t v = 0; v < p.v_size; ++v)
          tv[((u * p.x_size + x) * p.y_size + y) * p.v_size + v] =
              m > 0.0 ? inst.target()(u, x * p.v_size + v) / m : 1.0 / static_cast<double>(p.v_size);
    }
  return CausalInstance{
      inst.source(), inst.channel(),
      Kernel({{axis::U, p.u_size}}, {{axis::X, p.x_size}}, std::move(tx)),
      Kernel({{axis::U, p.u_size}, {axis::X, p.x_size}, {axis::Y, p.y_size}}, {{axis::V, p.v_size}},
             std::move(tv))};
}

CausalStructure causal_embedding(const StrictInstance& inst, const AuxKernelW& aux) {
  const auto& p = inst.profile();
  const auto nw = aux.kernel.target_count();
  const auto nv = p.v_size;
  std::vector<double> front(p.u_size * p.x_size * nw * nv, 0.0);
  for (std::size_t u = 0; u < p.u_size; ++u)
    for (std::size_t x = 0; x < p.x_size; ++x)
      for (std::size_t v = 0; v < nv; ++v) {
        const double q = inst.target()(u, x * nv + v);
        for (std::size_t w = 0; w < nw; ++w)
          front[u * p.x_size * nw * nv + (x * nw + w) * nv + v] =
              q * aux.kernel((u * p.x_size + x) * nv + v, w);
      }
  std::vector<double> back(p.y_size * nv * nv, 0.0);
  for (std::size_t y = 0; y < p.y_size; ++y)
    for (std::size_t v = 0; v < nv; ++v) back[(y * nv + v) * nv + v] = 1.0;
  return CausalStructure(
      inst.source(), inst.channel(),
      Kernel({{axis::U, p.u_size}}, {{axis::X, p.x_size}, {axis::W1, nw}, {axis::W2, nv}},
             std::move(front)),
      Kernel({{axis::Y, p.y_size}, {axis::W2, nv}}, {{axis::V, nv}}, std::move(back)));
}

double causal_upper_bound(const CausalInstance& inst) {
  const auto j = inst.joint();
  return mutual_information(j, {axis::X}, {axis::Y}) -
         mutual_information(j, {axis::U}, {axis::Y, axis::V});
}

// ------------------------------------------------------------- penalty search

namespace {

// Variables: split(w1,w2 | u,x) with the front kernel tx(x|u) split(w1,w2|u,x),
// and back(v | y,w2). The x-marginal therefore matches by construction.
class CausalEngine {
 public:
  CausalEngine(const CausalInstance& inst, std::size_t n1, std::size_t n2)
      : nu_(inst.source.size()),
        nx_(inst.channel.given_count()),
        ny_(inst.channel.target_count()),
        nv_(inst.target_v.target_count()),
        n1_(n1),
        n2_(n2),
        nw_(n1 * n2),
        q_(nu_ * nx_),
        t_(inst.channel.data().begin(), inst.channel.data().end()),
        tv_(inst.target_v.data().begin(), inst.target_v.data().end()) {
    std::vector<double> pu(nu_, 0.0);
    for (std::size_t u = 0; u < nu_; ++u)
      for (std::size_t x = 0; x < nx_; ++x) {
        q_[u * nx_ + x] = inst.source[u] * inst.target_x(u, x);
        pu[u] += q_[u * nx_ + x];
      }
    h_u_ = entropy_bits(pu);
  }

  std::size_t nu() const noexcept { return nu_; }
  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nv() const noexcept { return nv_; }
  std::size_t n1() const noexcept { return n1_; }
  std::size_t n2() const noexcept { return n2_; }
  std::size_t split_rows() const noexcept { return nu_ * nx_; }
  std::size_t split_width() const noexcept { return nw_; }
  std::size_t back_rows() const noexcept { return ny_ * n2_; }
  double row_weight(std::size_t ux) const noexcept { return q_[ux]; }
  double back_weight(std::size_t yw2) const noexcept { return back_mass_[yw2]; }

  struct Eval {
    double objective = 0.0;
    double penalty = 0.0;
    double residual = 0.0;
  };

  Eval evaluate(std::span<const double> split, std::span<const double> back) {
    p_w_.assign(nw_, 0.0);
    p_wy_.assign(nw_ * ny_, 0.0);
    p_uw_.assign(nu_ * nw_, 0.0);
    s2_.assign(nu_ * nx_ * n2_, 0.0);
    for (std::size_t u = 0; u < nu_; ++u)
      for (std::size_t x = 0; x < nx_; ++x) {
        const std::size_t ux = u * nx_ + x;
        const double q = q_[ux];
        for (std::size_t w = 0; w < nw_; ++w) {
          const double s = split[ux * nw_ + w];
          s2_[ux * n2_ + w % n2_] += s;
          const double m = q * s;
          if (m <= 0.0) continue;
          p_w_[w] += m;
          p_uw_[u * nw_ + w] += m;
          for (std::size_t y = 0; y < ny_; ++y) p_wy_[w * ny_ + y] += m * t_[x * ny_ + y];
        }
      }
    p_w2_.assign(n2_, 0.0);
    p_w2y_.assign(n2_ * ny_, 0.0);
    for (std::size_t w = 0; w < nw_; ++w) {
      p_w2_[w % n2_] += p_w_[w];
      for (std::size_t y = 0; y < ny_; ++y) p_w2y_[(w % n2_) * ny_ + y] += p_wy_[w * ny_ + y];
    }
    Eval ev;
    const double h_y_w2 = entropy_bits(p_w2y_) - entropy_bits(p_w2_);
    const double h_y_w = entropy_bits(p_wy_) - entropy_bits(p_w_);
    const double h_u_w = entropy_bits(p_uw_) - entropy_bits(p_w_);
    ev.objective = (h_y_w2 - h_y_w) - (h_u_ - h_u_w);

    err_.assign(nu_ * nx_ * ny_ * nv_, 0.0);
    back_mass_.assign(ny_ * n2_, 0.0);
    for (std::size_t ux = 0; ux < nu_ * nx_; ++ux) {
      const std::size_t x = ux % nx_;
      for (std::size_t y = 0; y < ny_; ++y) {
        const double mass = q_[ux] * t_[x * ny_ + y];
        for (std::size_t w2 = 0; w2 < n2_; ++w2) back_mass_[y * n2_ + w2] += mass * s2_[ux * n2_ + w2];
        if (mass <= 0.0) continue;
        for (std::size_t v = 0; v < nv_; ++v) {
          double induced = 0.0;
          for (std::size_t w2 = 0; w2 < n2_; ++w2)
            induced += s2_[ux * n2_ + w2] * back[(y * n2_ + w2) * nv_ + v];
          const double e = induced - tv_[(ux * ny_ + y) * nv_ + v];
          err_[(ux * ny_ + y) * nv_ + v] = e;
          ev.penalty += mass * e * e;
          ev.residual = std::max(ev.residual, std::abs(e));
        }
      }
    }
    return ev;
  }

  /// Gradient of objective - rho * penalty w.r.t. split, divided by the row mass.
  void split_gradient(std::span<const double> split, std::span<const double> back, double rho,
                      std::vector<double>& out) const {
    out.assign(split.size(), 0.0);
    for (std::size_t ux = 0; ux < nu_ * nx_; ++ux) {
      if (q_[ux] <= 0.0) continue;
      const std::size_t u = ux / nx_, x = ux % nx_;
      for (std::size_t w = 0; w < nw_; ++w) {
        if (split[ux * nw_ + w] <= 0.0) continue;
        const std::size_t w2 = w % n2_;
        double g = -std::log2(p_uw_[u * nw_ + w] / p_w_[w]);
        for (std::size_t y = 0; y < ny_; ++y) {
          const double ty = t_[x * ny_ + y];
          if (ty <= 0.0) continue;
          g += ty * (std::log2(p_wy_[w * ny_ + y] / p_w_[w]) -
                     std::log2(p_w2y_[w2 * ny_ + y] / p_w2_[w2]));
          double pen = 0.0;
          for (std::size_t v = 0; v < nv_; ++v)
            pen += err_[(ux * ny_ + y) * nv_ + v] * back[(y * n2_ + w2) * nv_ + v];
          g -= rho * 2.0 * ty * pen;
        }
        out[ux * nw_ + w] = g;
      }
    }
  }

  /// Gradient of -rho * penalty w.r.t. back, divided by the (y,w2) mass.
  void back_gradient(std::span<const double> back, double rho, std::vector<double>& out) const {
    out.assign(back.size(), 0.0);
    for (std::size_t ux = 0; ux < nu_ * nx_; ++ux) {
      const std::size_t x = ux % nx_;
      for (std::size_t y = 0; y < ny_; ++y) {
        const double mass = q_[ux] * t_[x * ny_ + y];
        if (mass <= 0.0) continue;
        for (std::size_t w2 = 0; w2 < n2_; ++w2) {
          const double s = s2_[ux * n2_ + w2];
          if (s <= 0.0) continue;
          for (std::size_t v = 0; v < nv_; ++v)
            out[(y * n2_ + w2) * nv_ + v] -= rho * 2.0 * mass * s * err_[(ux * ny_ + y) * nv_ + v];
        }
      }
    }
    for (std::size_t r = 0; r < ny_ * n2_; ++r) {
      const double m = back_mass_[r];
      for (std::size_t v = 0; v < nv_; ++v) out[r * nv_ + v] = m > 0.0 ? out[r * nv_ + v] / m : 0.0;
    }
  }

 private:
  std::size_t nu_, nx_, ny_, nv_, n1_, n2_, nw_;
  std::vector<double> q_, t_, tv_;
  double h_u_ = 0.0;
  std::vector<double> p_w_, p_wy_, p_uw_, p_w2_, p_w2y_, s2_, err_, back_mass_;
};

void mirror_rows(std::span<const double> cur, std::span<const double> grad, std::size_t width,
                 double eta, const std::vector<bool>& active, std::vector<double>& out) {
  out.assign(cur.begin(), cur.end());
  for (std::size_t r = 0; r < active.size(); ++r) {
    if (!active[r]) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < width; ++k)
      if (cur[r * width + k] > 0.0) top = std::max(top, eta * grad[r * width + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      const double c = cur[r * width + k];
      const double nv = c > 0.0 ? c * std::exp(eta * grad[r * width + k] - top) : 0.0;
      out[r * width + k] = nv;
      z += nv;
    }
    for (std::size_t k = 0; k < width; ++k) out[r * width + k] /= z;
  }
}

struct CausalPoint {
  std::vector<double> split;
  std::vector<double> back;
  double value = 0.0;
  double residual = 0.0;
};

struct CausalStart {
  std::string label;
  std::vector<double> split;
  std::vector<double> back;
};

constexpr double kPenaltyCap = 1048576.0;  // 2^20

CausalPoint penalty_ascent(CausalEngine& e, CausalStart start, const CausalOptions& o,
                           std::size_t& iterations) {
  auto split = std::move(start.split);
  auto back = std::move(start.back);
  std::vector<double> gs, gb, cand;
  std::vector<bool> split_active(e.split_rows()), back_active(e.back_rows());
  for (std::size_t r = 0; r < e.split_rows(); ++r) split_active[r] = e.row_weight(r) > 0.0;

  double rho = 1.0;
  double eta_s = 1.0, eta_b = 1.0;
  auto ev = e.evaluate(split, back);
  std::size_t budget = o.max_iters;
  for (;;) {
    double lag = ev.objective - rho * ev.penalty;
    while (budget > 0) {
      --budget;
      ++iterations;
      const double before = lag;

      bool moved = false;
      e.split_gradient(split, back, rho, gs);
      for (int h = 0; h < 40; ++h) {
        mirror_rows(split, gs, e.split_width(), eta_s, split_active, cand);
        const auto cev = e.evaluate(cand, back);
        const double cl = cev.objective - rho * cev.penalty;
        if (cl > lag) {
          split.swap(cand);
          ev = cev;
          lag = cl;
          eta_s = std::min(eta_s * 2.0, 1e3);
          moved = true;
          break;
        }
        eta_s *= 0.5;
      }
      ev = e.evaluate(split, back);

      e.back_gradient(back, rho, gb);
      for (std::size_t r = 0; r < e.back_rows(); ++r) back_active[r] = e.back_weight(r) > 0.0;
      for (int h = 0; h < 40; ++h) {
        mirror_rows(back, gb, e.nv(), eta_b, back_active, cand);
        const auto cev = e.evaluate(split, cand);
        const double cl = cev.objective - rho * cev.penalty;
        if (cl > lag) {
          back.swap(cand);
          ev = cev;
          lag = cl;
          eta_b = std::min(eta_b * 2.0, 1e3);
          moved = true;
          break;
        }
        eta_b *= 0.5;
      }
      ev = e.evaluate(split, back);
      if (!std::isfinite(lag)) throw NumericError("maximize_causal: non-finite objective");
      if (!moved || lag - before < o.tol) break;
    }
    if (ev.residual <= o.residual_tol || rho >= kPenaltyCap || budget == 0) break;
    rho *= 2.0;
  }
  return {std::move(split), std::move(back), ev.objective, ev.residual};
}

std::vector<double> target_v_given_y(const CausalInstance& inst) {
  const auto j = inst.joint();
  const auto k = conditional(j, {axis::V}, {axis::Y});
  return {k.data().begin(), k.data().end()};
}

bool target_v_ignores_y(const CausalInstance& inst) {
  const auto nu = inst.source.size(), nx = inst.channel.given_count(),
             ny = inst.channel.target_count(), nv = inst.target_v.target_count();
  for (std::size_t ux = 0; ux < nu * nx; ++ux)
    for (std::size_t y = 1; y < ny; ++y)
      for (std::size_t v = 0; v < nv; ++v)
        if (std::abs(inst.target_v(ux * ny + y, v) - inst.target_v(ux * ny, v)) > 1e-12) return false;
  return true;
}

std::vector<CausalStart> causal_starts(const CausalInstance& inst, const CausalEngine& e,
                                       const CausalOptions& o) {
  const auto nu = e.nu(), nx = e.nx(), ny = e.ny(), nv = e.nv(), n1 = e.n1(), n2 = e.n2();
  const auto nw = n1 * n2;
  std::vector<CausalStart> out;
  const auto pvy = target_v_given_y(inst);
  auto back_from_y = [&] {
    std::vector<double> b(ny * n2 * nv);
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t w2 = 0; w2 < n2; ++w2)
        for (std::size_t v = 0; v < nv; ++v) b[(y * n2 + w2) * nv + v] = pvy[y * nv + v];
    return b;
  };
  auto split_map = [&](auto map) {
    std::vector<double> s(nu * nx * nw, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x) {
        const auto [w1, w2] = map(u, x);
        s[(u * nx + x) * nw + w1 * n2 + w2] = 1.0;
      }
    return s;
  };

  if (n1 >= nx)
    out.push_back({"w1=x", split_map([](std::size_t, std::size_t x) {
                     return std::pair<std::size_t, std::size_t>{x, 0};
                   }),
                   back_from_y()});
  out.push_back({"constant", split_map([](std::size_t, std::size_t) {
                   return std::pair<std::size_t, std::size_t>{0, 0};
                 }),
                 back_from_y()});
  if (n2 >= nu * nx) {
    std::vector<double> b(ny * n2 * nv, 1.0 / static_cast<double>(nv));
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
          for (std::size_t v = 0; v < nv; ++v)
            b[(y * n2 + u * nx + x) * nv + v] = inst.target_v((u * nx + x) * ny + y, v);
    out.push_back({"w2=(u,x)", split_map([&](std::size_t u, std::size_t x) {
                     return std::pair<std::size_t, std::size_t>{0, u * nx + x};
                   }),
                   std::move(b)});
  }
  if (n2 >= nv && target_v_ignores_y(inst)) {
    // Strictly causal certificate W: W1 = W, W2 = V, back copies W2.
    std::vector<double> rows(nu * nx * nv);
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t v = 0; v < nv; ++v)
          rows[u * nx * nv + x * nv + v] = inst.target_x(u, x) * inst.target_v((u * nx + x) * ny, v);
    StrictInstance strict(inst.source, inst.channel, make_target(nu, nx, nv, std::move(rows)));
    auto sopts = o.strict;
    sopts.w_size = std::min(n1, sopts.w_size.value_or(strict.profile().default_w_size()));
    const auto rep = maximize_strict(strict, sopts);
    const auto& cert = rep.certificate->kernel;
    const auto nws = rep.certificate->w_size;
    std::vector<double> s(nu * nx * nw, 0.0);
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t v = 0; v < nv; ++v) {
          const double pv = inst.target_v((u * nx + x) * ny, v);
          for (std::size_t w = 0; w < nws; ++w)
            s[(u * nx + x) * nw + w * n2 + v] += pv * cert((u * nx + x) * nv + v, w);
        }
    std::vector<double> b(ny * n2 * nv, 1.0 / static_cast<double>(nv));
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t w2 = 0; w2 < nv; ++w2)
        for (std::size_t v = 0; v < nv; ++v) b[(y * n2 + w2) * nv + v] = v == w2 ? 1.0 : 0.0;
    out.push_back({"strict-embedding", std::move(s), std::move(b)});
  }
  for (std::size_t k = 0; k < o.restarts; ++k) {
    CounterRng rng(derive_seed(o.seed, 0x63617573616cULL, k));
    auto dirichlet = [&](std::size_t rows, std::size_t width) {
      std::vector<double> r(rows * width);
      for (std::size_t i = 0; i < rows; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < width; ++j) z += (r[i * width + j] = rng.exponential());
        for (std::size_t j = 0; j < width; ++j) r[i * width + j] /= z;
      }
      return r;
    };
    auto s = dirichlet(nu * nx, nw);
    auto b = dirichlet(ny * n2, nv);
    out.push_back({"random-" + std::to_string(k), std::move(s), std::move(b)});
  }
  return out;
}

CausalStructure to_structure(const CausalInstance& inst, const CausalEngine& e,
                             const CausalPoint& p) {
  const auto nu = e.nu(), nx = e.nx(), nw = e.split_width();
  std::vector<double> front(nu * nx * nw);
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t w = 0; w < nw; ++w)
        front[(u * nx + x) * nw + w] = inst.target_x(u, x) * p.split[(u * nx + x) * nw + w];
  return CausalStructure(
      inst.source, inst.channel,
      Kernel({{axis::U, nu}}, {{axis::X, nx}, {axis::W1, e.n1()}, {axis::W2, e.n2()}},
             std::move(front)),
      Kernel({{axis::Y, e.ny()}, {axis::W2, e.n2()}}, {{axis::V, e.nv()}}, p.back));
}

}  // namespace

ConstraintReport maximize_causal(const CausalInstance& inst, const CausalOptions& opts) {
  inst.validate();
  const auto ceiling = inst.source.size() * inst.channel.given_count() *
                           inst.channel.target_count() * inst.target_v.target_count() +
                       2;
  const auto n1 = opts.w1_size.value_or(ceiling);
  const auto n2 = opts.w2_size.value_or(ceiling);
  if (n1 < 1 || n2 < 1) throw ConfigurationError("w1_size and w2_size must be >= 1");
  if (opts.max_iters < 1) throw ConfigurationError("max_iters must be >= 1");
  if (!(opts.tol > 0.0)) throw ConfigurationError("tol must be > 0");
  if (!(opts.residual_tol > 0.0)) throw ConfigurationError("residual_tol must be > 0");

  CausalEngine engine(inst, n1, n2);
  auto starts = causal_starts(inst, engine, opts);

  ConstraintReport rep;
  rep.restarts_used = starts.size();
  std::optional<CausalPoint> best;
  bool best_feasible = false;
  auto consider = [&](CausalPoint p, const std::string& label) {
    const bool feasible = p.residual <= opts.residual_tol;
    bool better = false;
    if (!best)
      better = true;
    else if (feasible != best_feasible)
      better = feasible;
    else if (feasible)
      better = p.value > best->value;
    else
      better = p.residual < best->residual;
    if (better) {
      best_feasible = feasible;
      best = std::move(p);
      rep.best_start = label;
    }
  };

  for (auto& start : starts) {
    // The start itself is a candidate so deterministic seeds are never lost.
    const auto ev0 = engine.evaluate(start.split, start.back);
    consider({start.split, start.back, ev0.objective, ev0.residual}, start.label);
    const auto label = start.label;
    consider(penalty_ascent(engine, std::move(start), opts, rep.iterations), label);
  }

  auto structure = to_structure(inst, engine, *best);
  rep.value = objective_causal(structure).value;
  rep.marginal_residual = best->residual;
  rep.causal_certificate = std::move(structure);
  rep.upper_bound = causal_upper_bound(inst);
  rep.lower_bound = rep.value;
  if (best_feasible && rep.value >= -kNumericalZero)
    rep.verdict = Verdict::Achievable;
  else if (rep.upper_bound < -kNumericalZero)
    rep.verdict = Verdict::NotAchievable;
  else
    rep.verdict = Verdict::Undetermined;
  return rep;
}

}  // namespace coordkit
