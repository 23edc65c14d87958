#include "coordkit/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "coordkit/errors.hpp"

namespace coordkit {

namespace {

std::vector<std::size_t> strides_of(const AxisList& axes) {
  std::vector<std::size_t> s(axes.size(), 1);
  for (std::size_t i = axes.size(); i-- > 1;) s[i - 1] = s[i] * axes[i].size;
  return s;
}

std::string describe(const AxisList& axes) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) os << ',';
    os << axes[i].name << ':' << axes[i].size;
  }
  os << ')';
  return os.str();
}

std::string describe_index(std::size_t flat, const AxisList& axes) {
  const auto strides = strides_of(axes);
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) os << ',';
    os << axes[i].name << '=' << (flat / strides[i]) % axes[i].size;
  }
  os << ']';
  return os.str();
}

void check_axes(const AxisList& axes, const char* what) {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].size == 0)
      throw InstanceFormatError(std::string(what) + ": axis '" + axes[i].name + "' has size 0");
    if (axes[i].name.empty()) throw InstanceFormatError(std::string(what) + ": unnamed axis");
    for (std::size_t j = 0; j < i; ++j)
      if (axes[j].name == axes[i].name)
        throw InstanceFormatError(std::string(what) + ": duplicate axis '" + axes[i].name + "'");
  }
}

void check_simplex(std::span<const double> cells, double tol, const std::string& where,
                   const AxisList& axes) {
  double total = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double v = cells[i];
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream os;
      os << where << ": entry " << describe_index(i, axes) << " = " << v
         << " is not a nonnegative finite probability";
      throw InstanceFormatError(os.str());
    }
    total += v;
  }
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream os;
    os.precision(12);
    os << where << ": entries sum to " << total << ", not 1 (tolerance " << tol << ")";
    throw InstanceFormatError(os.str());
  }
}

// Positions of `names` inside `axes`; throws on unknown names.
std::vector<std::size_t> positions(const AxisList& axes, const Names& names) {
  std::vector<std::size_t> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    auto it = std::find_if(axes.begin(), axes.end(), [&](const Axis& a) { return a.name == n; });
    if (it == axes.end())
      throw InstanceFormatError("unknown axis '" + n + "' in " + describe(axes));
    out.push_back(static_cast<std::size_t>(it - axes.begin()));
  }
  return out;
}

// Sums the joint onto the axes at `pos` (in that order).
std::vector<double> project(const FiniteDist& joint, const std::vector<std::size_t>& pos,
                            AxisList* out_axes = nullptr) {
  const auto& axes = joint.axes();
  AxisList sub;
  for (auto p : pos) sub.push_back(axes[p]);
  const auto sub_strides = strides_of(sub);
  std::vector<std::size_t> target_stride(axes.size(), 0);
  for (std::size_t k = 0; k < pos.size(); ++k) target_stride[pos[k]] += sub_strides[k];

  std::vector<double> out(cell_count(sub), 0.0);
  std::vector<std::size_t> idx(axes.size(), 0);
  std::size_t target = 0;
  const auto table = joint.table();
  for (std::size_t flat = 0; flat < table.size(); ++flat) {
    out[target] += table[flat];
    // odometer increment, maintaining the projected offset
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++idx[a] < axes[a].size) {
        target += target_stride[a];
        break;
      }
      target -= target_stride[a] * (axes[a].size - 1);
      idx[a] = 0;
    }
  }
  if (out_axes) *out_axes = std::move(sub);
  return out;
}

void require_disjoint(const Names& a, const Names& b, const char* what) {
  for (const auto& n : a)
    if (std::find(b.begin(), b.end(), n) != b.end())
      throw InstanceFormatError(std::string(what) + ": axis '" + n + "' appears in two groups");
}

}  // namespace

std::size_t cell_count(const AxisList& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size;
  return n;
}

Names names_of(const AxisList& axes) {
  Names out;
  for (const auto& a : axes) out.push_back(a.name);
  return out;
}

void AlphabetProfile::validate() const {
  auto need = [](std::size_t v, const char* name) {
    if (v < 1) throw InstanceFormatError(std::string("alphabet size ") + name + " must be >= 1");
  };
  need(u_size, "u");
  need(x_size, "x");
  need(y_size, "y");
  need(v_size, "v");
  if (w_size) need(*w_size, "w");
  if (w1_size) need(*w1_size, "w1");
  if (w2_size) need(*w2_size, "w2");
}

std::vector<std::string> AlphabetProfile::overrides() const {
  std::vector<std::string> out;
  if (w_size && *w_size > default_w_size()) out.emplace_back("w_size");
  if (w1_size && *w1_size > default_w12_size()) out.emplace_back("w1_size");
  if (w2_size && *w2_size > default_w12_size()) out.emplace_back("w2_size");
  return out;
}

// ---------------------------------------------------------------- FiniteDist

FiniteDist::FiniteDist(AxisList axes, std::vector<double> table, double tol)
    : axes_(std::move(axes)), table_(std::move(table)) {
  check_axes(axes_, "distribution");
  if (table_.size() != cell_count(axes_))
    throw InstanceFormatError("distribution over " + describe(axes_) + " needs " +
                              std::to_string(cell_count(axes_)) + " entries, got " +
                              std::to_string(table_.size()));
  check_simplex(table_, tol, "distribution over " + describe(axes_), axes_);
}

FiniteDist FiniteDist::uniform(AxisList axes) {
  const auto n = cell_count(axes);
  return FiniteDist(std::move(axes), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

FiniteDist FiniteDist::point_mass(AxisList axes, std::span<const std::size_t> index) {
  if (index.size() != axes.size()) throw InstanceFormatError("point_mass: index rank mismatch");
  std::vector<double> t(cell_count(axes), 0.0);
  const auto s = strides_of(axes);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= axes[i].size) throw InstanceFormatError("point_mass: index out of range");
    flat += index[i] * s[i];
  }
  t[flat] = 1.0;
  return FiniteDist(std::move(axes), std::move(t));
}

std::size_t FiniteDist::axis_position(std::string_view name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].name == name) return i;
  throw InstanceFormatError("unknown axis '" + std::string(name) + "' in " + describe(axes_));
}

bool FiniteDist::has_axis(std::string_view name) const noexcept {
  return std::any_of(axes_.begin(), axes_.end(), [&](const Axis& a) { return a.name == name; });
}

double FiniteDist::at(std::span<const std::size_t> index) const {
  if (index.size() != axes_.size()) throw InstanceFormatError("index rank mismatch");
  const auto s = strides_of(axes_);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= axes_[i].size) throw InstanceFormatError("index out of range");
    flat += index[i] * s[i];
  }
  return table_[flat];
}

// -------------------------------------------------------------------- Kernel

Kernel::Kernel(AxisList given, AxisList target, std::vector<double> rows, double tol)
    : given_(std::move(given)), target_(std::move(target)), rows_(std::move(rows)) {
  AxisList all = given_;
  all.insert(all.end(), target_.begin(), target_.end());
  check_axes(all, "kernel");
  if (target_.empty()) throw InstanceFormatError("kernel needs at least one target axis");
  given_count_ = cell_count(given_);
  target_count_ = cell_count(target_);
  if (rows_.size() != given_count_ * target_count_)
    throw InstanceFormatError("kernel " + describe(target_) + "|" + describe(given_) + " needs " +
                              std::to_string(given_count_ * target_count_) + " entries, got " +
                              std::to_string(rows_.size()));
  for (std::size_t g = 0; g < given_count_; ++g)
    check_simplex(row(g), tol,
                  "kernel " + describe(target_) + "|" + describe(given_) + " row " +
                      (given_.empty() ? std::string("[]") : describe_index(g, given_)),
                  target_);
}

Kernel Kernel::uniform(AxisList given, AxisList target) {
  const auto g = cell_count(given), t = cell_count(target);
  return Kernel(std::move(given), std::move(target),
                std::vector<double>(g * t, 1.0 / static_cast<double>(t)));
}

Kernel Kernel::deterministic(AxisList given, AxisList target, std::span<const std::size_t> map) {
  const auto g = cell_count(given), t = cell_count(target);
  if (map.size() != g) throw InstanceFormatError("deterministic kernel: map size mismatch");
  std::vector<double> rows(g * t, 0.0);
  for (std::size_t i = 0; i < g; ++i) {
    if (map[i] >= t) throw InstanceFormatError("deterministic kernel: target out of range");
    rows[i * t + map[i]] = 1.0;
  }
  return Kernel(std::move(given), std::move(target), std::move(rows));
}

bool Kernel::is_permutation() const noexcept {
  if (given_count_ != target_count_) return false;
  std::vector<bool> hit(target_count_, false);
  for (std::size_t g = 0; g < given_count_; ++g) {
    std::size_t ones = 0, where = 0;
    for (std::size_t t = 0; t < target_count_; ++t) {
      const double v = (*this)(g, t);
      if (v == 1.0) {
        ++ones;
        where = t;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1 || hit[where]) return false;
    hit[where] = true;
  }
  return true;
}

// ------------------------------------------------------------ SymbolSequence

void SymbolSequenceBlock::validate() const {
  if (axes.empty() || sequences.size() != axes.size())
    throw InstanceFormatError("sequence block needs one sequence per axis");
  const auto n = sequences.front().size();
  if (n == 0) throw InstanceFormatError("sequence block is empty");
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (sequences[a].size() != n)
      throw InstanceFormatError("sequence for axis '" + axes[a].name + "' has length " +
                                std::to_string(sequences[a].size()) + ", expected " +
                                std::to_string(n));
    for (std::size_t i = 0; i < n; ++i)
      if (sequences[a][i] >= axes[a].size)
        throw InstanceFormatError("symbol " + std::to_string(sequences[a][i]) + " at position " +
                                  std::to_string(i) + " of axis '" + axes[a].name +
                                  "' is outside its alphabet");
  }
}

// ---------------------------------------------------------------- operations

FiniteDist compose_chain(const FiniteDist& source, const Kernel& target, const Kernel& channel) {
  if (source.rank() != 1)
    throw InstanceFormatError("compose_chain: source must be a distribution over one axis");
  const std::size_t nu = source.axes()[0].size;
  if (target.given().size() != 1 || target.given()[0].size != nu)
    throw InstanceFormatError("compose_chain: target kernel must be conditioned on the source axis");
  if (target.target().size() != 2)
    throw InstanceFormatError("compose_chain: target kernel must be over (X, V)");
  const std::size_t nx = target.target()[0].size, nv = target.target()[1].size;
  if (channel.given().size() != 1 || channel.given()[0].size != nx || channel.target().size() != 1)
    throw InstanceFormatError("compose_chain: channel input alphabet does not match X (|X| = " +
                              std::to_string(nx) + ")");
  const std::size_t ny = channel.target()[0].size;

  AxisList axes{{source.axes()[0].name, nu},
                target.target()[0],
                channel.target()[0],
                target.target()[1]};
  std::vector<double> t(nu * nx * ny * nv, 0.0);
  for (std::size_t u = 0; u < nu; ++u)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t v = 0; v < nv; ++v)
          t[((u * nx + x) * ny + y) * nv + v] = source[u] * target(u, x * nv + v) * channel(x, y);
  return FiniteDist(std::move(axes), std::move(t));
}

FiniteDist join(const FiniteDist& marginal_dist, const Kernel& kernel) {
  if (kernel.given() != marginal_dist.axes())
    throw InstanceFormatError("join: kernel given axes " + describe(kernel.given()) +
                              " differ from distribution axes " + describe(marginal_dist.axes()));
  AxisList axes = marginal_dist.axes();
  axes.insert(axes.end(), kernel.target().begin(), kernel.target().end());
  std::vector<double> t(marginal_dist.size() * kernel.target_count());
  for (std::size_t g = 0; g < marginal_dist.size(); ++g)
    for (std::size_t k = 0; k < kernel.target_count(); ++k)
      t[g * kernel.target_count() + k] = marginal_dist[g] * kernel(g, k);
  return FiniteDist(std::move(axes), std::move(t));
}

FiniteDist product(const FiniteDist& a, const FiniteDist& b) {
  AxisList axes = a.axes();
  axes.insert(axes.end(), b.axes().begin(), b.axes().end());
  std::vector<double> t(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) t[i * b.size() + j] = a[i] * b[j];
  return FiniteDist(std::move(axes), std::move(t));
}

FiniteDist marginal(const FiniteDist& joint, const Names& keep) {
  if (keep.empty()) throw InstanceFormatError("marginal: no axes requested");
  const auto pos = positions(joint.axes(), keep);
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (keep[i] == keep[j]) throw InstanceFormatError("marginal: duplicate axis '" + keep[i] + "'");
  AxisList sub;
  auto t = project(joint, pos, &sub);
  return FiniteDist(std::move(sub), std::move(t));
}

Kernel conditional(const FiniteDist& joint, const Names& keep, const Names& given) {
  require_disjoint(keep, given, "conditional");
  if (keep.empty()) throw InstanceFormatError("conditional: no target axes requested");
  Names all = given;
  all.insert(all.end(), keep.begin(), keep.end());
  AxisList sub;
  auto t = project(joint, positions(joint.axes(), all), &sub);
  AxisList g_axes(sub.begin(), sub.begin() + static_cast<std::ptrdiff_t>(given.size()));
  AxisList k_axes(sub.begin() + static_cast<std::ptrdiff_t>(given.size()), sub.end());
  const auto gc = cell_count(g_axes), kc = cell_count(k_axes);
  for (std::size_t g = 0; g < gc; ++g) {
    double mass = 0.0;
    for (std::size_t k = 0; k < kc; ++k) mass += t[g * kc + k];
    for (std::size_t k = 0; k < kc; ++k)
      t[g * kc + k] = mass > 0.0 ? t[g * kc + k] / mass : 1.0 / static_cast<double>(kc);
  }
  return Kernel(std::move(g_axes), std::move(k_axes), std::move(t));
}

FiniteDist reorder(const FiniteDist& dist, const Names& order) {
  if (order.size() != dist.rank())
    throw InstanceFormatError("reorder: permutation must name every axis exactly once");
  return marginal(dist, order);
}

double entropy_bits(std::span<const double> p) noexcept {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

double entropy(const FiniteDist& joint, const Names& group) {
  if (group.empty()) return entropy_bits(joint.table());
  return entropy_bits(project(joint, positions(joint.axes(), group)));
}

double mutual_information(const FiniteDist& joint, const Names& a, const Names& b,
                          const Names& c) {
  require_disjoint(a, b, "mutual_information");
  require_disjoint(a, c, "mutual_information");
  require_disjoint(b, c, "mutual_information");
  if (a.empty() || b.empty()) throw InstanceFormatError("mutual_information: empty group");
  auto cat = [](Names x, const Names& y) {
    x.insert(x.end(), y.begin(), y.end());
    return x;
  };
  const double hc = c.empty() ? 0.0 : entropy(joint, c);
  const double value =
      entropy(joint, cat(a, c)) + entropy(joint, cat(b, c)) - entropy(joint, cat(cat(a, b), c)) - hc;
  if (value < 0.0 && value >= -1e-12) return 0.0;
  return value;
}

double tv_distance(const FiniteDist& p, const FiniteDist& q) {
  if (p.axes() != q.axes())
    throw InstanceFormatError("tv_distance: axes " + describe(p.axes()) + " and " +
                              describe(q.axes()) + " differ");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::min(1.0, 0.5 * s);
}

std::vector<std::uint64_t> empirical_counts(const SymbolSequenceBlock& block) {
  block.validate();
  const auto strides = strides_of(block.axes);
  std::vector<std::uint64_t> counts(cell_count(block.axes), 0);
  const auto n = block.length();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < block.axes.size(); ++a) flat += block.sequences[a][i] * strides[a];
    ++counts[flat];
  }
  return counts;
}

FiniteDist empirical_distribution(const SymbolSequenceBlock& block) {
  const auto counts = empirical_counts(block);
  const double n = static_cast<double>(block.length());
  std::vector<double> t(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) t[i] = static_cast<double>(counts[i]) / n;
  return FiniteDist(block.axes, std::move(t));
}

bool is_typical_counts(std::span<const std::uint64_t> counts, std::uint64_t n,
                       std::span<const double> target, double eps) noexcept {
  const double nn = static_cast<double>(n);
  for (std::size_t a = 0; a < counts.size(); ++a) {
    const double q = target[a];
    if (q <= 0.0) {
      if (counts[a] != 0) return false;
      continue;
    }
    // compare in count units; the relative slack absorbs rounding of n*q
    if (std::abs(static_cast<double>(counts[a]) - nn * q) > eps * nn * q * (1.0 + 1e-12) + 1e-9)
      return false;
  }
  return true;
}

bool is_typical(const SymbolSequenceBlock& block, const FiniteDist& target, double eps) {
  if (!(eps > 0.0)) throw ConfigurationError("is_typical: eps must be > 0");
  if (block.axes != target.axes())
    throw InstanceFormatError("is_typical: block axes " + describe(block.axes) +
                              " differ from target axes " + describe(target.axes()));
  const auto counts = empirical_counts(block);
  return is_typical_counts(counts, block.length(), target.table(), eps);
}

SymbolSequenceBlock concatenate(std::span<const SymbolSequenceBlock> blocks) {
  if (blocks.empty()) throw InstanceFormatError("concatenate: no blocks");
  SymbolSequenceBlock out{blocks.front().axes, {}};
  out.sequences.resize(out.axes.size());
  for (const auto& b : blocks) {
    if (b.axes != out.axes) throw InstanceFormatError("concatenate: blocks over different axes");
    b.validate();
    for (std::size_t a = 0; a < out.axes.size(); ++a)
      out.sequences[a].insert(out.sequences[a].end(), b.sequences[a].begin(), b.sequences[a].end());
  }
  return out;
}

}  // namespace coordkit
