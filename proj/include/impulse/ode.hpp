#pragma once

// Adaptive Dormand-Prince 5(4) integration with escape and blow-up guards.

#include <Eigen/Dense>
#include <functional>
#include <optional>

namespace impulse {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  /// Abort after this many accepted steps (per call).
  long max_steps = 2'000'000;
};

/// State must stay inside [lo, hi]; leaving it raises FlowEscape.
struct EscapeBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  bool contains(const Eigen::VectorXd& y) const {
    return (y.array() >= lo.array()).all() && (y.array() <= hi.array()).all();
  }
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

/// Integrates y' = rhs(t, y) from t0 to t1 in place (t1 < t0 allowed).
/// Throws IntegrationError on non-finite state or step-size underflow and
/// FlowEscape when `guard` is given and the state leaves it.
void integrate(const OdeRhs& rhs, Eigen::VectorXd& y, double t0, double t1, const OdeOptions& opts,
               const std::optional<EscapeBox>& guard = std::nullopt);

}  // namespace impulse
