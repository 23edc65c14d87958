#include "coordkit/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "coordkit/errors.hpp"
#include "coordkit/region.hpp"
#include "coordkit/rng.hpp"

namespace coordkit {

namespace {

enum Stream : std::uint64_t {
  kSource = 0x11,
  kEncoder = 0x12,
  kChannel = 0x13,
  kDecoder = 0x14,
  kCommon = 0x15,
};

constexpr double kRateSlack = 1e-12;

std::vector<double> table_of(const FiniteDist& joint, const Names& keep) {
  const auto m = marginal(joint, keep);
  return {m.table().begin(), m.table().end()};
}

std::vector<double> rows_of(const FiniteDist& joint, const Names& keep, const Names& given) {
  const auto k = conditional(joint, keep, given);
  return {k.data().begin(), k.data().end()};
}

std::vector<double> copy_rows(std::size_t given, std::size_t width) {
  // Row (y, a) puts all mass on v = a.
  std::vector<double> rows(given * width * width, 0.0);
  for (std::size_t g = 0; g < given; ++g)
    for (std::size_t a = 0; a < width; ++a) rows[(g * width + a) * width + a] = 1.0;
  return rows;
}

std::size_t book_count(double bits) {
  return static_cast<std::size_t>(std::ceil(std::exp2(bits) - 1e-9));
}

std::string cap_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Codebooks make_books(const RatePlan& plan, const CodeConfig& cfg, std::vector<double> v_law,
                     std::vector<double> w_law, std::vector<double> init_law) {
  if (!plan.feasible) throw InfeasibleError("rate plan refused: " + plan.violated);
  const double n = static_cast<double>(cfg.n);
  const double e1 = std::ceil(n * plan.r - 1e-9);
  const double e2 = std::ceil(n * (plan.r + plan.r_l) - 1e-9);
  const double needed = std::exp2(e1) + std::exp2(e2);
  if (e1 >= 63.0 || e2 >= 63.0 || needed > static_cast<double>(cfg.codeword_cap)) {
    throw ConfigurationError("codebooks need 2^" + std::to_string(static_cast<long long>(e1)) +
                             " + 2^" + std::to_string(static_cast<long long>(e2)) +
                             " codewords, above codeword_cap = " + std::to_string(cfg.codeword_cap) +
                             "; the cap must be at least " + cap_text(needed));
  }
  return Codebooks(cfg.seed, cfg.n, book_count(n * plan.r), book_count(n * plan.r_l),
                   std::move(v_law), std::move(w_law), std::move(init_law));
}

std::vector<double> input_law(const Kernel& channel) {
  const auto cap = channel_capacity(channel);
  return {cap.argmax_input.table().begin(), cap.argmax_input.table().end()};
}

std::vector<double> init_joint(const std::vector<double>& px, const Kernel& channel) {
  const auto nx = channel.given_count(), ny = channel.target_count();
  std::vector<double> q(nx * ny);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) q[x * ny + y] = px[x] * channel(x, y);
  return q;
}

}  // namespace

// ------------------------------------------------------------------- config

void CodeConfig::validate() const {
  if (n < 1) throw ConfigurationError("n must be >= 1");
  if (blocks < 3) throw ConfigurationError("blocks must be >= 3");
  if (!(delta > 0.0)) throw ConfigurationError("delta must be > 0");
  if (!(eps_typ > 0.0)) throw ConfigurationError("eps_typ must be > 0");
  if (codeword_cap < 2) throw ConfigurationError("codeword_cap must be >= 2");
}

// -------------------------------------------------------------------- rates

RatePlan plan_rates(double i_source, double i_bin, double i_pack, double capacity, double delta) {
  if (!(delta > 0.0)) throw ConfigurationError("delta must be > 0");
  RatePlan p;
  p.i_source = i_source;
  p.i_bin = i_bin;
  p.i_pack = i_pack;
  p.capacity = capacity;
  p.r = i_source + delta;
  p.r_l = i_bin + delta;
  p.slack = i_pack - delta - p.r - p.r_l;
  p.init_margin = capacity - p.r - 2.0 * delta;
  if (p.slack < -kRateSlack) {
    p.violated = "R + R_L <= I(W;Y,V) - delta fails: " + std::to_string(p.r + p.r_l) + " > " +
                 std::to_string(i_pack - delta);
  } else if (p.init_margin < -kRateSlack) {
    p.violated = "first-block condition capacity - R - 2 delta >= 0 fails: " +
                 std::to_string(p.init_margin);
  }
  p.feasible = p.violated.empty();
  return p;
}

RatePlan plan_rates(const StrictInstance& inst, const AuxKernelW& aux, double delta) {
  const auto j = strict_aux_joint(inst, aux);
  return plan_rates(mutual_information(j, {axis::V}, {axis::U}),
                    mutual_information(j, {axis::W}, {axis::U, axis::V}),
                    mutual_information(j, {axis::W}, {axis::Y, axis::V}),
                    channel_capacity(inst.channel()).capacity, delta);
}

RatePlan plan_rates(const CausalStructure& s, double delta) {
  const auto j = s.joint();
  return plan_rates(mutual_information(j, {axis::W2}, {axis::U}),
                    mutual_information(j, {axis::W1}, {axis::U, axis::W2}),
                    mutual_information(j, {axis::W1}, {axis::Y, axis::W2}),
                    channel_capacity(s.channel()).capacity, delta);
}

// ---------------------------------------------------------------- codebooks

Codebooks::Codebooks(std::uint64_t seed, std::size_t n, std::size_t m_count, std::size_t l_count,
                     std::vector<double> v_law, std::vector<double> w_law,
                     std::vector<double> init_law)
    : seed_(seed),
      n_(n),
      m_count_(m_count),
      l_count_(l_count),
      v_law_(std::move(v_law)),
      w_law_(std::move(w_law)),
      init_law_(std::move(init_law)) {}

std::size_t Codebooks::size(Book b) const noexcept {
  return b == Book::W ? m_count_ * l_count_ : m_count_;
}

void Codebooks::fill(Book b, std::size_t index, std::span<std::uint16_t> out) const {
  if (index >= size(b)) throw ConfigurationError("codebook index out of range");
  if (out.size() != n_) throw ConfigurationError("codeword buffer must have length n");
  const auto& law = b == Book::V ? v_law_ : b == Book::W ? w_law_ : init_law_;
  CounterRng rng(derive_seed(seed_, static_cast<std::uint64_t>(b), index));
  for (auto& s : out) s = static_cast<std::uint16_t>(rng.categorical(law));
}

std::vector<std::uint16_t> Codebooks::sequence(Book b, std::size_t index) const {
  std::vector<std::uint16_t> out(n_);
  fill(b, index, out);
  return out;
}

Codebooks build_codebooks(const StrictInstance& inst, const AuxKernelW& aux,
                          const CodeConfig& config) {
  config.validate();
  const auto j = strict_aux_joint(inst, aux);
  return make_books(plan_rates(inst, aux, config.delta), config, table_of(j, {axis::V}),
                    table_of(j, {axis::W}), input_law(inst.channel()));
}

// ------------------------------------------------------------------- scheme

const char* to_string(SimMode m) noexcept {
  switch (m) {
    case SimMode::Strict:
      return "strict";
    case SimMode::Causal:
      return "causal";
    case SimMode::ZeroCapacity:
      return "zero_capacity";
  }
  return "strict";
}

/// First-layer symbols are called `a` (V, or W2), second-layer `b` (W, or W1).
struct SimScheme::Tables {
  SimMode mode = SimMode::Strict;
  CodeConfig config;
  RatePlan plan;
  Codebooks books;
  FiniteDist target;  // (U, X, Y, V)
  std::size_t nu = 0, nx = 0, ny = 0, nv = 0, na = 0, nb = 0;
  std::vector<double> source, channel;
  std::vector<double> a_law;
  std::vector<double> q_ua, q_uab, q_yab, q_xy_init;
  std::vector<double> x_given_uab, x_given_ua, v_given_ya;
};

SimScheme SimScheme::strict(const StrictInstance& inst, const AuxKernelW& aux,
                            const CodeConfig& config) {
  config.validate();
  const auto j = strict_aux_joint(inst, aux);
  const auto& p = inst.profile();
  const auto plan = plan_rates(inst, aux, config.delta);
  const auto px = input_law(inst.channel());
  auto books = make_books(plan, config, table_of(j, {axis::V}), table_of(j, {axis::W}), px);
  const auto src = inst.source().table();
  const auto ch = inst.channel().data();
  return SimScheme(std::make_shared<const Tables>(Tables{
      SimMode::Strict, config, plan, std::move(books), inst.joint(), p.u_size, p.x_size, p.y_size,
      p.v_size, p.v_size, aux.w_size, std::vector<double>(src.begin(), src.end()),
      std::vector<double>(ch.begin(), ch.end()), table_of(j, {axis::V}),
      table_of(j, {axis::U, axis::V}), table_of(j, {axis::U, axis::V, axis::W}),
      table_of(j, {axis::Y, axis::V, axis::W}), init_joint(px, inst.channel()),
      rows_of(j, {axis::X}, {axis::U, axis::V, axis::W}), rows_of(j, {axis::X}, {axis::U, axis::V}),
      copy_rows(p.y_size, p.v_size)}));
}

SimScheme SimScheme::causal(const CausalStructure& s, const CodeConfig& config) {
  config.validate();
  const auto j = s.joint();
  const auto plan = plan_rates(s, config.delta);
  const auto px = input_law(s.channel());
  auto books = make_books(plan, config, table_of(j, {axis::W2}), table_of(j, {axis::W1}), px);
  const auto src = s.source().table();
  const auto ch = s.channel().data();
  const auto back = s.back().data();
  return SimScheme(std::make_shared<const Tables>(Tables{
      SimMode::Causal, config, plan, std::move(books),
      marginal(j, {axis::U, axis::X, axis::Y, axis::V}), s.source().size(),
      s.channel().given_count(), s.channel().target_count(), s.back().target_count(), s.w2_size(),
      s.w1_size(), std::vector<double>(src.begin(), src.end()),
      std::vector<double>(ch.begin(), ch.end()), table_of(j, {axis::W2}),
      table_of(j, {axis::U, axis::W2}), table_of(j, {axis::U, axis::W2, axis::W1}),
      table_of(j, {axis::Y, axis::W2, axis::W1}), init_joint(px, s.channel()),
      rows_of(j, {axis::X}, {axis::U, axis::W2, axis::W1}),
      rows_of(j, {axis::X}, {axis::U, axis::W2}), std::vector<double>(back.begin(), back.end())}));
}

SimScheme SimScheme::zero_capacity(const StrictInstance& inst, const CodeConfig& config) {
  config.validate();
  const auto j = inst.joint();
  const auto& p = inst.profile();
  RatePlan plan;
  plan.capacity = channel_capacity(inst.channel()).capacity;
  plan.feasible = true;
  const auto src = inst.source().table();
  const auto ch = inst.channel().data();
  return SimScheme(std::make_shared<const Tables>(Tables{
      SimMode::ZeroCapacity, config, plan, Codebooks(config.seed, config.n, 0, 0, {}, {}, {}), j,
      p.u_size, p.x_size, p.y_size, p.v_size, p.v_size, 1,
      std::vector<double>(src.begin(), src.end()), std::vector<double>(ch.begin(), ch.end()),
      table_of(j, {axis::V}), table_of(j, {axis::U, axis::V}), {}, {}, {}, {},
      rows_of(j, {axis::X}, {axis::U, axis::V}), copy_rows(p.y_size, p.v_size)}));
}

SimMode SimScheme::mode() const noexcept { return tables_->mode; }
const CodeConfig& SimScheme::config() const noexcept { return tables_->config; }
const RatePlan& SimScheme::plan() const noexcept { return tables_->plan; }
const Codebooks& SimScheme::codebooks() const noexcept { return tables_->books; }
const FiniteDist& SimScheme::target() const noexcept { return tables_->target; }

// -------------------------------------------------------------------- trial

namespace {

using Seq = std::vector<std::uint16_t>;

/// Robust typicality of up to three aligned sequences against a joint
/// table in row-major order of the sequences.
class JointTypicality {
 public:
  explicit JointTypicality(double eps) : eps_(eps) {}

  bool operator()(std::span<const double> target, std::span<const std::uint16_t> s1,
                  std::size_t n2, std::span<const std::uint16_t> s2, std::size_t n3 = 1,
                  std::span<const std::uint16_t> s3 = {}) {
    counts_.assign(target.size(), 0);
    const std::size_t n = s1.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx = (s1[i] * n2 + s2[i]) * n3 + (s3.empty() ? 0 : s3[i]);
      if (target[idx] <= 0.0) return false;
      ++counts_[idx];
    }
    return is_typical_counts(counts_, n, target, eps_);
  }

 private:
  double eps_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace

TrialResult run_trial(const SimScheme& scheme, std::size_t trial_index) {
  const auto& t = scheme.tables();
  const auto& cfg = t.config;
  const std::size_t n = cfg.n, nb = cfg.blocks;
  auto stream = [&](std::uint64_t s, std::size_t b) {
    return CounterRng(derive_seed(cfg.seed, trial_index, s, b));
  };
  auto row = [](const std::vector<double>& rows, std::size_t r, std::size_t width) {
    return std::span<const double>(rows).subspan(r * width, width);
  };

  std::vector<Seq> u(nb, Seq(n));
  for (std::size_t b = 0; b < nb; ++b) {
    auto rng = stream(kSource, b);
    for (auto& s : u[b]) s = static_cast<std::uint16_t>(rng.categorical(t.source));
  }

  std::vector<BlockRecord> rec(nb);
  Seq x(n), y(n), v(n), a_enc(n), a_dec(n), w(n), cand(n);
  JointTypicality typical(cfg.eps_typ);
  const auto cells = t.nu * t.nx * t.ny * t.nv;

  auto send = [&](std::size_t b) {
    auto rng = stream(kChannel, b);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = static_cast<std::uint16_t>(rng.categorical(row(t.channel, x[i], t.ny)));
  };
  auto decode_output = [&](std::size_t b) {
    auto rng = stream(kDecoder, b);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = static_cast<std::uint16_t>(
          rng.categorical(row(t.v_given_ya, y[i] * t.na + a_dec[i], t.nv)));
  };
  auto record = [&](std::size_t b) {
    auto& c = rec[b].counts;
    c.assign(cells, 0);
    for (std::size_t i = 0; i < n; ++i) ++c[((u[b][i] * t.nx + x[i]) * t.ny + y[i]) * t.nv + v[i]];
    rec[b].typical = is_typical_counts(c, n, t.target.table(), cfg.eps_typ);
  };

  if (t.mode == SimMode::ZeroCapacity) {
    for (std::size_t b = 0; b < nb; ++b) {
      auto common = stream(kCommon, b);
      for (auto& s : a_dec) s = static_cast<std::uint16_t>(common.categorical(t.a_law));
      auto enc = stream(kEncoder, b);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = static_cast<std::uint16_t>(
            enc.categorical(row(t.x_given_ua, u[b][i] * t.na + a_dec[i], t.nx)));
      send(b);
      decode_output(b);
      record(b);
    }
  } else {
    const auto& books = t.books;
    const std::size_t m_count = books.m_count(), l_count = books.l_count();
    auto cover_first = [&](const Seq& src) -> std::optional<std::size_t> {
      for (std::size_t m = 0; m < m_count; ++m) {
        books.fill(Book::V, m, cand);
        if (typical(t.q_ua, src, t.na, cand)) return m;
      }
      return std::nullopt;
    };
    std::vector<std::size_t> m_enc(nb, 0), m_dec(nb, 0);

    // First block: the index for block 2 travels on the init codebook.
    {
      const auto c = cover_first(u[1]);
      rec[1].cover_v = !c;
      m_enc[1] = c.value_or(0);
      books.fill(Book::Init, m_enc[1], x);
      send(0);
      std::fill(v.begin(), v.end(), 0);
      record(0);
      std::optional<std::size_t> found;
      for (std::size_t m = 0; m < m_count && !found; ++m) {
        books.fill(Book::Init, m, cand);
        if (typical(t.q_xy_init, cand, t.ny, y)) found = m;
      }
      m_dec[1] = found.value_or(0);
      rec[0].init = !found || *found != m_enc[1];
    }

    for (std::size_t b = 1; b + 1 < nb; ++b) {
      books.fill(Book::V, m_enc[b], a_enc);
      const auto c = cover_first(u[b + 1]);
      rec[b + 1].cover_v = !c;
      m_enc[b + 1] = c.value_or(0);

      std::optional<std::size_t> l_found;
      for (std::size_t l = 0; l < l_count && !l_found; ++l) {
        books.fill(Book::W, m_enc[b + 1] * l_count + l, cand);
        if (typical(t.q_uab, u[b], t.na, a_enc, t.nb, cand)) l_found = l;
      }
      rec[b].cover_w = !l_found;
      const std::size_t sent = m_enc[b + 1] * l_count + l_found.value_or(0);
      books.fill(Book::W, sent, w);

      auto enc = stream(kEncoder, b);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = static_cast<std::uint16_t>(enc.categorical(
            row(t.x_given_uab, (u[b][i] * t.na + a_enc[i]) * t.nb + w[i], t.nx)));
      send(b);
      books.fill(Book::V, m_dec[b], a_dec);
      decode_output(b);
      record(b);

      std::optional<std::size_t> decoded;
      for (std::size_t idx = 0; idx < m_count * l_count && !decoded; ++idx) {
        books.fill(Book::W, idx, cand);
        if (typical(t.q_yab, y, t.na, a_dec, t.nb, cand)) decoded = idx;
      }
      m_dec[b + 1] = decoded ? *decoded / l_count : m_dec[b];
      rec[b].packing = !decoded || *decoded != sent;
    }

    const std::size_t last = nb - 1;
    books.fill(Book::V, m_enc[last], a_enc);
    auto enc = stream(kEncoder, last);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = static_cast<std::uint16_t>(
          enc.categorical(row(t.x_given_ua, u[last][i] * t.na + a_enc[i], t.nx)));
    send(last);
    books.fill(Book::V, m_dec[last], a_dec);
    decode_output(last);
    record(last);
  }

  std::vector<std::uint64_t> full(cells, 0), trunc(cells, 0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t k = 0; k < cells; ++k) {
      full[k] += rec[b].counts[k];
      if (b > 0 && b + 1 < nb) trunc[k] += rec[b].counts[k];
    }
  auto normalize = [](const std::vector<std::uint64_t>& c, std::size_t len) {
    std::vector<double> p(c.size());
    for (std::size_t k = 0; k < c.size(); ++k)
      p[k] = static_cast<double>(c[k]) / static_cast<double>(len);
    return p;
  };
  FiniteDist emp_full(t.target.axes(), normalize(full, n * nb));
  FiniteDist emp_trunc(t.target.axes(), normalize(trunc, n * (nb - 2)));
  const double tv_full = tv_distance(emp_full, t.target);
  const double tv_trunc = tv_distance(emp_trunc, t.target);
  return TrialResult{trial_index,          std::move(rec),       std::move(full),
                     std::move(trunc),     std::move(emp_full),  std::move(emp_trunc),
                     tv_full,              tv_trunc,             tv_full <= cfg.eps_typ};
}

TrialResult run_trial(const StrictInstance& inst, const AuxKernelW& aux, const CodeConfig& config,
                      SimMode mode, std::size_t trial_index) {
  switch (mode) {
    case SimMode::Strict:
      return run_trial(SimScheme::strict(inst, aux, config), trial_index);
    case SimMode::Causal:
      return run_trial(SimScheme::causal(causal_embedding(inst, aux), config), trial_index);
    case SimMode::ZeroCapacity:
      return run_trial(SimScheme::zero_capacity(inst, config), trial_index);
  }
  throw ConfigurationError("unknown simulation mode");
}

bool mixing_identity_holds(const TrialResult& r) {
  const auto nb = r.blocks.size();
  if (nb < 3) return false;
  for (std::size_t k = 0; k < r.counts_full.size(); ++k) {
    std::uint64_t inner = 0;
    for (std::size_t b = 1; b + 1 < nb; ++b) inner += r.blocks[b].counts[k];
    if (inner != r.counts_truncated[k]) return false;
    if (r.counts_full[k] != inner + r.blocks.front().counts[k] + r.blocks.back().counts[k])
      return false;
  }
  return true;
}

bool typicality_implication_holds(const TrialResult& r, const FiniteDist& target, double eps) {
  const auto nb = r.blocks.size();
  std::uint64_t n = 0;
  for (auto c : r.blocks.front().counts) n += c;
  bool all = true;
  for (std::size_t b = 1; b + 1 < nb; ++b)
    all = all && is_typical_counts(r.blocks[b].counts, n, target.table(), eps);
  return !all || is_typical_counts(r.counts_truncated, n * (nb - 2), target.table(), eps);
}

MonteCarloSummary monte_carlo(const SimScheme& scheme, std::size_t trials) {
  if (trials < 1) throw ConfigurationError("trials must be >= 1");
  const auto& cfg = scheme.config();
  const auto nb = cfg.blocks;
  const bool coded = scheme.mode() != SimMode::ZeroCapacity;
  MonteCarloSummary s;
  s.trials = trials;
  std::size_t failures = 0, cv = 0, cw = 0, pk = 0, in = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    const auto r = run_trial(scheme, k);
    failures += r.tv_full > cfg.eps_typ ? 1 : 0;
    s.mean_tv_full += r.tv_full;
    s.mean_tv_truncated += r.tv_truncated;
    for (std::size_t b = 0; b < nb; ++b) {
      cv += r.blocks[b].cover_v;
      cw += r.blocks[b].cover_w;
      pk += r.blocks[b].packing;
      in += r.blocks[b].init;
    }
    s.mixing_identity_ok = s.mixing_identity_ok && mixing_identity_holds(r);
    s.typicality_implication_ok = s.typicality_implication_ok && typicality_implication_holds(r, scheme.target(), cfg.eps_typ);
  }
  const double nt = static_cast<double>(trials);
  s.pe = static_cast<double>(failures) / nt;
  s.mean_tv_full /= nt;
  s.mean_tv_truncated /= nt;
  s.ci_halfwidth = 1.96 * std::sqrt(s.pe * (1.0 - s.pe) / nt);
  if (coded) {
    const double inner = static_cast<double>(nb - 2) * nt;
    s.rates.cover_v = static_cast<double>(cv) / (static_cast<double>(nb - 1) * nt);
    s.rates.cover_w = static_cast<double>(cw) / inner;
    s.rates.packing = static_cast<double>(pk) / inner;
    s.rates.init = static_cast<double>(in) / nt;
  }
  return s;
}

bool concatenation_check(std::span<const SymbolSequenceBlock> blocks, const FiniteDist& target,
                         double eps) {
  if (blocks.empty()) throw ConfigurationError("concatenation_check: no blocks");
  const auto len = blocks.front().length();
  for (const auto& b : blocks)
    if (b.length() != len)
      throw InstanceFormatError("concatenation_check: blocks must share one length");
  const bool each = std::all_of(blocks.begin(), blocks.end(),
                                [&](const auto& b) { return is_typical(b, target, eps); });
  const bool whole = is_typical(concatenate(blocks), target, eps);
  if (each && !whole)
    throw NumericError("concatenation_check: typical blocks produced an atypical concatenation");
  return whole;
}

}  // namespace coordkit
