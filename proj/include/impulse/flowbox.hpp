#pragma once

// Flow-box chart of commuting impulse fields.
//
// With the extended fields g_a = (g~_a, e_a) on R^{n+m}, the chart is
//
//   phi(x, z) = (varphi(x, z), z),   varphi(x, z) = Pr exp(-z_a g_a)(x, z),
//
// i.e. the unit-time flow of the frozen-coefficient field -sum_a z_a g_a. The
// flow ends on z = 0, so the inverse flows back from (xi, 0):
//
//   phi^{-1}(xi, zeta) = (Pr exp(zeta_a g_a)(xi, 0), zeta).
//
// In these coordinates g_a becomes the constant field e_{n+a} and the drift
// pushes forward to F = (F~, 0).

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>

#include "impulse/ode.hpp"
#include "impulse/system.hpp"

namespace impulse {

enum class DphiMode { FiniteDifference, Variational };

struct ChartOptions {
  OdeOptions ode{};
  DphiMode mode = DphiMode::FiniteDifference;
  double tol_push = 1e-5;
  /// Working box in R^{n+m}; flows leaving its 10x enlargement abort. Default [-1e3, 1e3].
  std::optional<std::pair<VectorXd, VectorXd>> working_box;
};

using VectorField = std::function<void(const VectorXd& p, VectorXd& out)>;

/// exp(t field)(p) by adaptive Runge-Kutta.
VectorXd exp_flow(const VectorField& field, double t, const VectorXd& p, const OdeOptions& opts = {},
                  const std::optional<EscapeBox>& guard = std::nullopt);

class FlowBoxChart {
 public:
  explicit FlowBoxChart(ControlAffineSystem sys, ChartOptions opts = {});

  const ControlAffineSystem& system() const { return sys_; }
  const ChartOptions& options() const { return opts_; }
  int n() const { return sys_.n(); }
  int m() const { return sys_.m(); }
  FlowBoxChart with_mode(DphiMode mode) const;

  /// varphi(x, z).
  VectorXd phi_pr(const VectorXd& x, const VectorXd& z) const;
  std::pair<VectorXd, VectorXd> phi(const VectorXd& x, const VectorXd& z) const;
  std::pair<VectorXd, VectorXd> phi_inverse(const VectorXd& xi, const VectorXd& zeta) const;
  /// x-part of phi^{-1}(xi, zeta).
  VectorXd phi_inverse_pr(const VectorXd& xi, const VectorXd& zeta) const;

  /// D phi(x, z) applied to a direction in R^{n+m}.
  VectorXd dphi_apply(const VectorXd& x, const VectorXd& z, const VectorXd& dir) const;
  /// Full (n+m) x (n+m) Jacobian of phi at (x, z).
  MatrixXd dphi(const VectorXd& x, const VectorXd& z) const;

  /// F = D phi f at phi^{-1}(xi, zeta), all n+m components (the last m vanish).
  VectorXd pushforward_drift_full(const VectorXd& xi, const VectorXd& zeta, const VectorXd& v) const;
  /// F~(xi, zeta, v). Throws FlowBoxViolation when the z-part exceeds tol_push.
  VectorXd pushforward_drift(const VectorXd& xi, const VectorXd& zeta, const VectorXd& v) const;
  /// G_alpha = D phi g_alpha at phi^{-1}(xi, zeta); equals e_{n+alpha} under commutativity.
  VectorXd pushforward_impulse(const VectorXd& xi, const VectorXd& zeta, int alpha) const;

 private:
  VectorXd flow_frozen(const VectorXd& start, const VectorXd& coeff) const;
  VectorXd variational_apply(const VectorXd& x, const VectorXd& z, const VectorXd& dir) const;

  ControlAffineSystem sys_;
  ChartOptions opts_;
  EscapeBox guard_;
};

/// Largest operator norm of D phi over Halton points of the box (empirical global bound).
double estimate_dphi_bound(const FlowBoxChart& chart, const VectorXd& lo, const VectorXd& hi, int n_samples);

}  // namespace impulse
