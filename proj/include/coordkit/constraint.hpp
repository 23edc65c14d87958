#pragma once

// Single-letter information constraints for empirical coordination with a
// non-causal encoder: evaluation, maximization over auxiliary kernels and
// analytic sandwich bounds, for strictly causal and causal decoding.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coordkit/prob.hpp"

namespace coordkit {

// Axis names used throughout the toolkit.
namespace axis {
inline const std::string U = "U";
inline const std::string X = "X";
inline const std::string Y = "Y";
inline const std::string V = "V";
inline const std::string W = "W";
inline const std::string W1 = "W1";
inline const std::string W2 = "W2";
}  // namespace axis

// Builders for the standard shapes.
FiniteDist make_source(std::vector<double> p);
/// Channel T(y|x); `rows` is row-major x then y.
Kernel make_channel(std::size_t x_size, std::size_t y_size, std::vector<double> rows);
/// Target Q(x,v|u); row u is the flattened (x,v) table, x-major.
Kernel make_target(std::size_t u_size, std::size_t x_size, std::size_t v_size,
                   std::vector<double> rows);
Kernel binary_symmetric_channel(double crossover);
Kernel identity_channel(std::size_t k);

/// Source law, channel and target conditional for strictly causal decoding.
/// The composed joint P_u(u) Q(x,v|u) T(y|x) factorizes by construction.
class StrictInstance {
 public:
  StrictInstance(FiniteDist source, Kernel channel, Kernel target);

  const FiniteDist& source() const noexcept { return source_; }
  const Kernel& channel() const noexcept { return channel_; }
  const Kernel& target() const noexcept { return target_; }
  const AlphabetProfile& profile() const noexcept { return profile_; }

  /// Joint over (U, X, Y, V).
  FiniteDist joint() const { return compose_chain(source_, target_, channel_); }

 private:
  FiniteDist source_;
  Kernel channel_;
  Kernel target_;
  AlphabetProfile profile_;
};

/// Auxiliary kernel Q(w|u,x,v).
struct AuxKernelW {
  std::size_t w_size = 1;
  Kernel kernel;  // W | (U, X, V)
  /// Set when w_size exceeds |U||X||V| + 1.
  bool overridden = false;
};

AuxKernelW make_aux(const StrictInstance& inst, std::size_t w_size, std::vector<double> rows);
/// W = X embedded in an alphabet of size w_size (>= |X|).
AuxKernelW aux_equal_to_x(const StrictInstance& inst, std::optional<std::size_t> w_size = {});
AuxKernelW aux_degenerate(const StrictInstance& inst, std::optional<std::size_t> w_size = {});

/// Joint over (U, X, Y, V, W) = P_u Q(x,v|u) Q(w|u,x,v) T(y|x).
FiniteDist strict_aux_joint(const StrictInstance& inst, const AuxKernelW& aux);

enum class Verdict { Achievable, NotAchievable, Undetermined };
const char* to_string(Verdict v) noexcept;

struct ClosedForm {
  std::string label;
  double value = 0.0;
};

/// Front Q(x,w1,w2|u) and back Q(v|y,w2) kernels for causal decoding.
class CausalStructure {
 public:
  CausalStructure(FiniteDist source, Kernel channel, Kernel front, Kernel back);

  const FiniteDist& source() const noexcept { return source_; }
  const Kernel& channel() const noexcept { return channel_; }
  const Kernel& front() const noexcept { return front_; }
  const Kernel& back() const noexcept { return back_; }
  std::size_t w1_size() const noexcept { return front_.target()[1].size; }
  std::size_t w2_size() const noexcept { return front_.target()[2].size; }
  /// Set when an auxiliary alphabet exceeds |U||X||Y||V| + 2.
  bool overridden() const noexcept { return overridden_; }

  /// Joint over (U, X, W1, W2, Y, V).
  FiniteDist joint() const;

 private:
  FiniteDist source_;
  Kernel channel_;
  Kernel front_;  // (X, W1, W2) | U
  Kernel back_;   // V | (Y, W2)
  bool overridden_ = false;
};

struct ConstraintReport {
  double value = 0.0;
  std::optional<AuxKernelW> certificate;
  std::optional<CausalStructure> causal_certificate;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::optional<ClosedForm> closed_form;
  Verdict verdict = Verdict::Undetermined;
  std::size_t restarts_used = 0;
  std::size_t iterations = 0;
  /// Label of the start that produced `value`.
  std::string best_start;
  /// Causal only: worst |induced - requested| entry of Q(v|u,x,y).
  double marginal_residual = 0.0;
  /// Objective sequence per start, when requested.
  std::vector<std::vector<double>> traces;
};

// ------------------------------------------------------------ strictly causal

struct DecompositionResult {
  bool pass = false;
  double max_deviation = 0.0;
};

enum class DecompositionMode { Strict, Causal };

/// Checks that `joint` over (U,X,Y,V) factorizes as P_u Q(x,v|u) T(y|x)
/// (strict) or P_u Q(x|u) T(y|x) Q(v|u,x,y) (causal) at tolerance 1e-7.
DecompositionResult decomposition_check(const FiniteDist& joint, const FiniteDist& source,
                                        const Kernel& channel, DecompositionMode mode);

/// I(W;Y|V) - I(U;V,W) in bits.
double objective_strict(const StrictInstance& inst, const AuxKernelW& aux);

struct AnalyticBounds {
  double lower = 0.0;  // I(X;Y|V) - I(U;V,X), auxiliary W = X
  double upper = 0.0;  // I(X;Y|U,V) - I(U;V), source feedforward
  std::optional<double> perfect_channel_value;  // H(X|V) - I(U;X,V)
  std::optional<double> product_value;          // I(X;Y) - I(U;V)
};

AnalyticBounds analytic_bounds(const StrictInstance& inst);

struct MaximizeOptions {
  std::optional<std::size_t> w_size;  // default |U||X||V| + 1
  std::size_t restarts = 16;
  std::size_t max_iters = 500;
  std::size_t inner_iters = 50;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  bool record_trace = false;
  /// Extra starting kernels (must match the resolved w_size).
  std::vector<AuxKernelW> warm_starts;
};

/// Difference-of-convex ascent over Q(w|u,x,v) from the deterministic seeds
/// (W = X, W = (X,V), constant W, a smoothed W = X) and `restarts` random
/// kernels. The returned value is attained by the certificate, so it is a
/// lower bound on the true maximum.
ConstraintReport maximize_strict(const StrictInstance& inst, const MaximizeOptions& opts = {});

/// Largest message rate that can be sent alongside coordination:
/// max(0, certified constraint).
double rate_margin(const StrictInstance& inst, const MaximizeOptions& opts = {});

// --------------------------------------------------------------------- causal

struct CausalObjective {
  double value = 0.0;
  Kernel induced_target;  // V | (U, X, Y)
  Kernel induced_x;       // X | U
};

/// I(W1;Y|W2) - I(W1,W2;U) and the target marginals the structure realizes.
CausalObjective objective_causal(const CausalStructure& s);

/// Requested causal target P_u Q(x|u) T(y|x) Q(v|u,x,y).
struct CausalInstance {
  FiniteDist source;
  Kernel channel;
  Kernel target_x;  // X | U
  Kernel target_v;  // V | (U, X, Y)

  void validate() const;
  /// Joint over (U, X, Y, V).
  FiniteDist joint() const;
};

/// Embeds a strictly causal instance: Q(x|u) and Q(v|u,x,y) = Q(v|u,x).
CausalInstance causal_from_strict(const StrictInstance& inst);

struct CausalOptions {
  std::optional<std::size_t> w1_size;  // default |U||X||Y||V| + 2
  std::optional<std::size_t> w2_size;  // default |U||X||Y||V| + 2
  std::size_t restarts = 4;
  /// Ascent steps per start, shared across all penalty weights.
  std::size_t max_iters = 500;
  double tol = 1e-9;
  double residual_tol = 1e-6;
  std::uint64_t seed = 0;
  /// Options for the strictly causal solve behind the embedding seed.
  MaximizeOptions strict;
};

/// Penalty search over causal structures whose induced marginals match the
/// requested target. Certified (Achievable) only when the residual is at
/// most `residual_tol` and the objective is nonnegative.
ConstraintReport maximize_causal(const CausalInstance& inst, const CausalOptions& opts = {});

/// Causal structure reproducing a strictly causal auxiliary: W1 = W,
/// W2 = V and the back kernel copies W2. Its objective equals
/// objective_strict(inst, aux).
CausalStructure causal_embedding(const StrictInstance& inst, const AuxKernelW& aux);

/// I(X;Y) - I(U;Y,V) of the requested target; no causal structure realizing
/// it can exceed this.
double causal_upper_bound(const CausalInstance& inst);

}  // namespace coordkit
