#pragma once

// Closed forms for the binary coordination game over a BSC and for the
// binary distortion-cost example.

#include "coordkit/region.hpp"

namespace coordkit {

/// Binary entropy in bits; throws DomainError outside [0, 1].
double hb(double x);

struct GameParams {
  double p = 0.5;
  double eps = 0.0;
  double gamma = 0.25;
};

struct CoordinationBounds {
  double lower = 0.0;
  double upper = 0.0;
  /// Hb(gamma) + (1 - gamma) log2 3 - 1, present when eps = 0.
  std::optional<double> perfect;
};

/// Lower (auxiliary W = X) and upper (source feedforward) bounds on the
/// constraint of the game family over BSC(eps). Only p = 0.5 is supported.
CoordinationBounds coordination_bounds(const GameParams& gp);

enum class BoundKind { Lower, Upper };

/// Root of the selected bound in gamma on [0.25, 1] to 1e-6; 0.25 when the
/// bound is nonpositive throughout.
double gamma_star(double eps, BoundKind bound);

/// Hb(alpha eps + (1-alpha)(1-eps)) + Hb(beta) - Hb(eps) - Hb(beta p + (1-beta)(1-p)).
double dc_constraint(double alpha, double beta, double p, double eps);

struct GameFamily {
  Kernel target;        // (X,V)|U
  UtilitySpec utility;  // 1{x = v = u}
};

/// gamma on x = v = u and (1 - gamma) / 3 on the other cells of each row.
GameFamily game_family(double gamma);

}  // namespace coordkit
