#pragma once

// Finite-alphabet probability arithmetic: named-axis distributions and
// kernels, entropy functionals, total variation, empirical distributions
// and robust typicality.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coordkit {

/// Input validation tolerance for normalization.
inline constexpr double kDistTolerance = 1e-9;
/// Threshold under which capacities and mutual informations count as zero.
inline constexpr double kNumericalZero = 1e-9;

struct Axis {
  std::string name;
  std::size_t size = 0;

  friend bool operator==(const Axis&, const Axis&) = default;
};

using AxisList = std::vector<Axis>;
using Names = std::vector<std::string>;

std::size_t cell_count(const AxisList& axes);
Names names_of(const AxisList& axes);

/// Alphabet sizes of a source-channel problem.
struct AlphabetProfile {
  std::size_t u_size = 0;
  std::size_t x_size = 0;
  std::size_t y_size = 0;
  std::size_t v_size = 0;
  std::optional<std::size_t> w_size;
  std::optional<std::size_t> w1_size;
  std::optional<std::size_t> w2_size;

  /// Ceiling on |W| for strictly causal decoding: |U||X||V| + 1.
  std::size_t default_w_size() const { return u_size * x_size * v_size + 1; }
  /// Ceiling on |W1|, |W2| for causal decoding: |U||X||Y||V| + 2.
  std::size_t default_w12_size() const { return u_size * x_size * y_size * v_size + 2; }

  /// Throws InstanceFormatError when a size is zero.
  void validate() const;
  /// Names of auxiliary sizes that exceed their default ceiling.
  std::vector<std::string> overrides() const;
};

/// A probability table over the product of named axes, row-major in axis
/// order. Axis order is part of the identity of the distribution; use
/// reorder() to permute.
class FiniteDist {
 public:
  /// Validates nonnegativity and normalization within `tol`.
  FiniteDist(AxisList axes, std::vector<double> table, double tol = kDistTolerance);

  static FiniteDist uniform(AxisList axes);
  static FiniteDist point_mass(AxisList axes, std::span<const std::size_t> index);

  const AxisList& axes() const noexcept { return axes_; }
  std::span<const double> table() const noexcept { return table_; }
  std::size_t size() const noexcept { return table_.size(); }
  std::size_t rank() const noexcept { return axes_.size(); }

  /// Position of the named axis; throws InstanceFormatError when absent.
  std::size_t axis_position(std::string_view name) const;
  bool has_axis(std::string_view name) const noexcept;

  double operator[](std::size_t flat) const { return table_[flat]; }
  double at(std::span<const std::size_t> index) const;
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  friend bool operator==(const FiniteDist&, const FiniteDist&) = default;

 private:
  AxisList axes_;
  std::vector<double> table_;
};

/// Conditional distribution of `target` axes given `given` axes: one row per
/// joint index of the given axes, each a distribution over the target axes.
class Kernel {
 public:
  Kernel(AxisList given, AxisList target, std::vector<double> rows,
         double tol = kDistTolerance);

  static Kernel uniform(AxisList given, AxisList target);
  /// Deterministic kernel: row g puts all mass on target cell map[g].
  static Kernel deterministic(AxisList given, AxisList target, std::span<const std::size_t> map);

  const AxisList& given() const noexcept { return given_; }
  const AxisList& target() const noexcept { return target_; }
  std::size_t given_count() const noexcept { return given_count_; }
  std::size_t target_count() const noexcept { return target_count_; }

  std::span<const double> row(std::size_t g) const {
    return std::span<const double>(rows_).subspan(g * target_count_, target_count_);
  }
  double operator()(std::size_t g, std::size_t t) const { return rows_[g * target_count_ + t]; }
  std::span<const double> data() const noexcept { return rows_; }

  /// True when every row is a point mass and distinct rows hit distinct cells.
  bool is_permutation() const noexcept;

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  AxisList given_;
  AxisList target_;
  std::size_t given_count_ = 1;
  std::size_t target_count_ = 1;
  std::vector<double> rows_;
};

/// Sequences of symbols, one per axis, all of the same length.
struct SymbolSequenceBlock {
  AxisList axes;
  std::vector<std::vector<std::size_t>> sequences;

  std::size_t length() const noexcept { return sequences.empty() ? 0 : sequences.front().size(); }
  /// Throws InstanceFormatError on empty blocks, ragged lengths or symbols
  /// outside their axis range.
  void validate() const;
};

/// P_u(u) Q(x,v|u) T(y|x) over axes (U, X, Y, V).
FiniteDist compose_chain(const FiniteDist& source, const Kernel& target, const Kernel& channel);

/// p(a) k(b|a) over axes (a..., b...). The kernel's given axes must equal
/// the marginal's axes.
FiniteDist join(const FiniteDist& marginal, const Kernel& kernel);

/// Independent product over the concatenated axes.
FiniteDist product(const FiniteDist& a, const FiniteDist& b);

FiniteDist marginal(const FiniteDist& joint, const Names& keep);

/// Conditional kernel keep | given. Rows conditioned on zero-mass events are
/// uniform.
Kernel conditional(const FiniteDist& joint, const Names& keep, const Names& given);

FiniteDist reorder(const FiniteDist& dist, const Names& order);

/// Shannon entropy in bits of a raw probability vector (0 log 0 = 0).
double entropy_bits(std::span<const double> p) noexcept;

/// Joint entropy of the named axes (all axes when `group` is empty).
double entropy(const FiniteDist& joint, const Names& group = {});

/// I(A;B|C) in bits. Values within 1e-12 below zero are clamped to zero.
double mutual_information(const FiniteDist& joint, const Names& a, const Names& b,
                          const Names& c = {});

/// Half the L1 distance; axes must match exactly.
double tv_distance(const FiniteDist& p, const FiniteDist& q);

/// Occurrence counts N(a | block) in row-major order of the block's axes.
std::vector<std::uint64_t> empirical_counts(const SymbolSequenceBlock& block);
FiniteDist empirical_distribution(const SymbolSequenceBlock& block);

/// Robust typicality: |N(a)/n - Q(a)| <= eps Q(a) for every cell, so cells
/// with Q(a) = 0 must not occur.
bool is_typical(const SymbolSequenceBlock& block, const FiniteDist& target, double eps);
bool is_typical_counts(std::span<const std::uint64_t> counts, std::uint64_t n,
                       std::span<const double> target, double eps) noexcept;

SymbolSequenceBlock concatenate(std::span<const SymbolSequenceBlock> blocks);

}  // namespace coordkit
