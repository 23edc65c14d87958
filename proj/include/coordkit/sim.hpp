#pragma once

// Monte-Carlo simulation of block-Markov random codes for empirical
// coordination: strictly causal, causal, and the zero-capacity scheme with
// common randomness.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "coordkit/constraint.hpp"

namespace coordkit {

struct CodeConfig {
  std::size_t n = 100;       // block length
  std::size_t blocks = 12;   // B >= 3
  double delta = 0.05;       // rate slack
  double eps_typ = 0.1;      // typicality tolerance
  std::uint64_t seed = 0;
  std::uint64_t codeword_cap = std::uint64_t{1} << 20;

  /// Throws ConfigurationError outside the documented domains.
  void validate() const;
};

struct RatePlan {
  double r = 0.0;        // source description rate
  double r_l = 0.0;      // binning rate
  double i_source = 0.0; // I(V;U), or I(W2;U)
  double i_bin = 0.0;    // I(W;U,V), or I(W1;U,W2)
  double i_pack = 0.0;   // I(W;Y,V), or I(W1;Y,W2)
  double capacity = 0.0;
  /// i_pack - delta - r - r_l
  double slack = 0.0;
  /// capacity - r - 2 delta, for the first block
  double init_margin = 0.0;
  bool feasible = false;
  /// Names the violated inequality when infeasible.
  std::string violated;
};

RatePlan plan_rates(double i_source, double i_bin, double i_pack, double capacity, double delta);
RatePlan plan_rates(const StrictInstance& inst, const AuxKernelW& aux, double delta);
RatePlan plan_rates(const CausalStructure& s, double delta);

enum class Book : std::uint64_t { V = 1, W = 2, Init = 3 };

/// Random codebooks. Codeword symbols are a pure function of
/// (seed, book, index), so sequences are regenerated on demand rather than
/// stored. The V book holds the first-layer codewords (V, or W2 for causal
/// decoding), the W book the binned second layer indexed m * l_count + l.
class Codebooks {
 public:
  Codebooks(std::uint64_t seed, std::size_t n, std::size_t m_count, std::size_t l_count,
            std::vector<double> v_law, std::vector<double> w_law, std::vector<double> init_law);

  std::size_t n() const noexcept { return n_; }
  std::size_t m_count() const noexcept { return m_count_; }
  std::size_t l_count() const noexcept { return l_count_; }
  std::size_t size(Book b) const noexcept;

  void fill(Book b, std::size_t index, std::span<std::uint16_t> out) const;
  std::vector<std::uint16_t> sequence(Book b, std::size_t index) const;

  friend bool operator==(const Codebooks&, const Codebooks&) = default;

 private:
  std::uint64_t seed_;
  std::size_t n_, m_count_, l_count_;
  std::vector<double> v_law_, w_law_, init_law_;
};

/// Book sizes ceil(2^{nR}) and ceil(2^{nR_L}); refuses infeasible plans
/// (InfeasibleError) and configurations with 2^ceil(nR) + 2^ceil(n(R+R_L))
/// above the cap (ConfigurationError).
Codebooks build_codebooks(const StrictInstance& inst, const AuxKernelW& aux, const CodeConfig& config);

enum class SimMode { Strict, Causal, ZeroCapacity };
const char* to_string(SimMode m) noexcept;

struct BlockRecord {
  bool cover_v = false;  // no first-layer codeword covers the block's source
  bool cover_w = false;  // no bin index covers (U, V, W)
  bool packing = false;  // decoder index differs from the encoder's
  bool init = false;     // first-block index decoded wrongly
  bool typical = false;  // (U,X,Y,V) block is eps_typ-typical
  std::vector<std::uint64_t> counts;  // over (U,X,Y,V)

  friend bool operator==(const BlockRecord&, const BlockRecord&) = default;
};

struct TrialResult {
  std::size_t trial_index = 0;
  std::vector<BlockRecord> blocks;
  std::vector<std::uint64_t> counts_full;
  std::vector<std::uint64_t> counts_truncated;  // blocks 2 .. B-1
  FiniteDist empirical_full;
  FiniteDist empirical_truncated;
  double tv_full = 0.0;
  double tv_truncated = 0.0;
  bool success = false;  // tv_full <= eps_typ

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Full counts equal truncated counts plus the first and last blocks.
bool mixing_identity_holds(const TrialResult& r);

/// If every truncated block is typical then so is their concatenation.
bool typicality_implication_holds(const TrialResult& r, const FiniteDist& target, double eps);

/// A prepared scheme: tables, rate plan and codebooks. Immutable and cheap
/// to copy; trials only read it.
class SimScheme {
 public:
  static SimScheme strict(const StrictInstance& inst, const AuxKernelW& aux, const CodeConfig& config);
  static SimScheme causal(const CausalStructure& s, const CodeConfig& config);
  /// V is shared common randomness drawn from Q(v), X ~ Q(x|u,v).
  static SimScheme zero_capacity(const StrictInstance& inst, const CodeConfig& config);

  SimMode mode() const noexcept;
  const CodeConfig& config() const noexcept;
  const RatePlan& plan() const noexcept;
  const Codebooks& codebooks() const noexcept;
  /// Target over (U, X, Y, V).
  const FiniteDist& target() const noexcept;

  struct Tables;
  const Tables& tables() const noexcept { return *tables_; }

 private:
  explicit SimScheme(std::shared_ptr<const Tables> t) : tables_(std::move(t)) {}
  std::shared_ptr<const Tables> tables_;
};

/// One realization of n * B symbols; randomness derives from
/// (config.seed, trial_index).
TrialResult run_trial(const SimScheme& scheme, std::size_t trial_index = 0);
TrialResult run_trial(const StrictInstance& inst, const AuxKernelW& aux, const CodeConfig& config,
                      SimMode mode, std::size_t trial_index = 0);

struct EventRates {
  double cover_v = 0.0;
  double cover_w = 0.0;
  double packing = 0.0;
  double init = 0.0;
};

struct MonteCarloSummary {
  std::size_t trials = 0;
  double pe = 0.0;  // fraction of trials with tv_full > eps_typ
  double mean_tv_full = 0.0;
  double mean_tv_truncated = 0.0;
  double ci_halfwidth = 0.0;  // 95% normal approximation for pe
  /// Occurrences over opportunities: blocks 2..B for cover_v, 2..B-1 for
  /// cover_w and packing, block 1 for init.
  EventRates rates;
  bool mixing_identity_ok = true;
  bool typicality_implication_ok = true;
};

/// Trial t uses trial_index t.
MonteCarloSummary monte_carlo(const SimScheme& scheme, std::size_t trials);

/// Returns whether the concatenation is typical; throws NumericError if
/// every block is typical but the concatenation is not.
bool concatenation_check(std::span<const SymbolSequenceBlock> blocks, const FiniteDist& target,
                         double eps);

}  // namespace coordkit
