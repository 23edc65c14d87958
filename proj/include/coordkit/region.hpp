#pragma once

// Achievable set membership, expected utility, boundary search along
// one-parameter families, utility maximization, channel capacity and the
// binary distortion-cost grid.

#include <cstdint>
#include <optional>
#include <vector>

#include "coordkit/constraint.hpp"

namespace coordkit {

struct CapacityResult {
  double capacity = 0.0;
  FiniteDist argmax_input;  // over X
  std::size_t iterations = 0;
};

/// Blahut-Arimoto until successive estimates differ by less than `tol`.
CapacityResult channel_capacity(const Kernel& channel, double tol = 1e-12,
                                std::size_t max_iters = 100000);

struct MembershipResult {
  Verdict verdict = Verdict::Undetermined;
  double capacity = 0.0;
  /// True when the zero-capacity rule decided (achievable iff I(U;V) = 0).
  bool zero_capacity_rule = false;
  double source_target_information = 0.0;  // I(U;V)
  ConstraintReport report;
};

MembershipResult membership(const StrictInstance& inst, const MaximizeOptions& opts = {});

/// Utility table phi(u,x,y,v), row-major in that order, with optional
/// distortion d(u,v) and cost c(x) tables it was built from.
struct UtilitySpec {
  std::size_t u_size = 0, x_size = 0, y_size = 0, v_size = 0;
  std::vector<double> phi;
  std::optional<std::vector<double>> distortion;
  std::optional<std::vector<double>> cost;

  /// Throws InstanceFormatError on size mismatch or non-finite entries.
  void validate() const;
  double operator()(std::size_t u, std::size_t x, std::size_t y, std::size_t v) const {
    return phi[((u * x_size + x) * y_size + y) * v_size + v];
  }

  static UtilitySpec constant(const AlphabetProfile& p, double c);
  /// phi = -distortion_weight d(u,v) - cost_weight c(x).
  static UtilitySpec from_distortion_cost(const AlphabetProfile& p, std::vector<double> distortion,
                                          std::vector<double> cost, double distortion_weight = 1.0,
                                          double cost_weight = 1.0);
};

double expected_utility(const Kernel& target, const FiniteDist& source, const Kernel& channel,
                        const UtilitySpec& util);

enum class FamilyId { CoordinationGamma, DistortionCostAlphaBeta, UserLinear };

/// A one-parameter family of targets Q(x,v|u).
struct FamilySpec {
  FamilyId id = FamilyId::CoordinationGamma;
  double lo = 0.25;
  double hi = 1.0;
  /// DistortionCostAlphaBeta: the parameter is beta when true (alpha fixed
  /// to `fixed`), alpha otherwise (beta fixed).
  bool vary_beta = true;
  double fixed = 0.5;
  /// UserLinear: target(t) = (1 - t) first + t second.
  std::optional<Kernel> first;
  std::optional<Kernel> second;

  static FamilySpec coordination();
  static FamilySpec distortion_cost(bool vary_beta, double fixed, double lo = 0.0, double hi = 1.0);
  static FamilySpec user_linear(Kernel first, Kernel second);

  Kernel at(double param) const;
};

/// Target Q(x,v|u) = Q(x) Q(v|u) with Q(X=0) = alpha and Q(V != U | U) = beta.
Kernel distortion_cost_target(double alpha, double beta);

enum class BoundSelector { Lower, Upper, Certified };

struct BisectionOptions {
  double tol = 1e-6;
  MaximizeOptions strict;  // used by BoundSelector::Certified
};

struct BisectionResult {
  double param_star = 0.0;
  double constraint_at_star = 0.0;
  /// False when the selected bound keeps one sign on the interval.
  bool crossing = true;
  std::size_t evaluations = 0;
};

/// Locates the zero of the selected constraint bound along the family,
/// assuming it is nonnegative near `lo` and negative near `hi`. Without a
/// sign change the feasible endpoint furthest along the interval is
/// returned, or the endpoint with the larger value when neither is feasible.
BisectionResult boundary_bisection_family(const FamilySpec& family, const FiniteDist& source,
                                          const Kernel& channel, BoundSelector bound,
                                          const BisectionOptions& opts = {});

/// Cheaper inner solves for repeated certification.
inline MaximizeOptions certification_options() {
  MaximizeOptions o;
  o.restarts = 2;
  o.max_iters = 200;
  return o;
}

struct MaxUtilityOptions {
  std::size_t outer_iters = 300;
  double step = 0.05;
  double fd_step = 1e-4;
  std::size_t certify_every = 10;
  std::size_t restarts = 2;
  std::uint64_t seed = 0;
  /// Inner solves used for certification.
  MaximizeOptions strict = certification_options();
};

struct MaxUtilityResult {
  Kernel target_star;
  double utility = 0.0;
  ConstraintReport report;
  /// Start that led to the returned target.
  std::string origin;
  /// True when the returned target is the independent-V fallback.
  bool fallback = false;
};

/// Penalized projected ascent on Q(x,v|u) keeping the best target whose
/// constraint is certified nonnegative.
MaxUtilityResult max_utility_generic(const FiniteDist& source, const Kernel& channel,
                                     const UtilitySpec& util, const MaxUtilityOptions& opts = {});

struct RegionCell {
  double distortion = 0.0;  // D* = beta
  double cost = 0.0;        // C* = alpha
  double constraint = 0.0;
  bool achievable = false;
};

/// cells[i * d_values.size() + j] holds (cost = c_values[i], distortion = d_values[j]).
struct RegionGrid {
  double p = 0.5;
  double eps = 0.0;
  double step = 0.01;
  std::vector<double> d_values;
  std::vector<double> c_values;
  std::vector<RegionCell> cells;

  const RegionCell& at(std::size_t c_index, std::size_t d_index) const {
    return cells[c_index * d_values.size() + d_index];
  }
};

/// Grid values are i * step for i = 0 .. floor(1 / step), with 1 appended
/// when the step does not divide it.
RegionGrid distortion_cost_region(double p, double eps, double grid_step = 0.01);

}  // namespace coordkit
